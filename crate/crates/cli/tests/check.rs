use std::process::Command;

use hyperatl::{parse_manifest, run, run_suite, CheckConfig, FormulaSource, PropSpec, SystemBinding};

fn verdict(prop: &str, program: &str) -> bool {
    run(&CheckConfig::builtin(prop.parse().unwrap(), program))
        .unwrap()
        .satisfied
}

fn text_check(formula: String, program: &str) -> bool {
    let cfg = CheckConfig::new(
        FormulaSource::Text(formula),
        vec![format!("g={program}").parse::<SystemBinding>().unwrap()],
    );
    run(&cfg).unwrap().satisfied
}

#[test]
fn small_benchmarks() {
    assert!(verdict("od", "P1"));
    assert!(!verdict("od", "P2"));
    assert!(verdict("ni", "P2"));
    assert!(!verdict("od", "Q1"));
    assert!(verdict("od-async", "Q1"));
}

#[test]
fn stuttering_repairs_flip_program() {
    assert!(!verdict("od", "flip"));
    assert!(verdict("od-async", "flip"));
}

#[test]
fn negation_flips_the_verdict() {
    for p in ["P1", "P2", "P3", "P4"] {
        let report = run(&CheckConfig::builtin(PropSpec::Od, p)).unwrap();
        assert_eq!(text_check(report.formula.clone(), p), report.satisfied, "{p}");
        assert_eq!(text_check(format!("!{}", report.formula), p), !report.satisfied, "{p}");
    }
}

#[test]
fn od_is_symmetric_in_its_paths() {
    for p in ["P1", "P2", "P3", "P4"] {
        let swapped = "[forall p1 @ g . forall p2 @ g .] G (o[0]{p2} <-> o[0]{p1})";
        assert_eq!(text_check(swapped.into(), p), verdict("od", p), "{p}");
    }
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run_once = |tag: &str| {
        let mut cfg = CheckConfig::builtin(PropSpec::SimSec, "P3");
        cfg.dump_dpa = Some(dir.path().join(format!("dpa{tag}.dot")));
        cfg.dump_game = Some(dir.path().join(format!("game{tag}.dot")));
        cfg.dump_sys = vec![("g".into(), dir.path().join(format!("sys{tag}.dot")))];
        let record: String = run(&cfg)
            .unwrap()
            .to_record()
            .lines()
            .filter(|l| !l.starts_with("time."))
            .map(|l| format!("{l}\n"))
            .collect();
        record
    };
    assert_eq!(run_once("a"), run_once("b"));
    for f in ["dpa", "game", "sys"] {
        let a = std::fs::read(dir.path().join(format!("{f}a.dot"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("{f}b.dot"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn uncollapsed_game_agrees() {
    for p in ["P1", "P2", "P3", "P4"] {
        for prop in ["od", "ni", "simsec"] {
            let mut cfg = CheckConfig::builtin(prop.parse().unwrap(), p);
            let small = run(&cfg).unwrap();
            cfg.uncollapsed = true;
            let full = run(&cfg).unwrap();
            assert_eq!(small.satisfied, full.satisfied, "{p} {prop}");
            assert!(small.game_vertices <= full.game_vertices);
        }
    }
}

#[test]
fn empty_manifest_is_an_empty_suite() {
    let entries = parse_manifest("# nothing here\n\n", std::path::Path::new(".")).unwrap();
    assert!(entries.is_empty());
    assert!(run_suite(&entries, 2).is_empty());
}

#[test]
fn manifest_errors_name_the_line() {
    let err = parse_manifest("a P1 od\nb P1 bogus\n", std::path::Path::new(".")).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
    let err = parse_manifest("a P1 od\na P2 od\n", std::path::Path::new(".")).unwrap_err();
    assert!(err.to_string().contains("duplicate"), "{err}");
}

fn hyperatl(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hyperatl"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| hyperatl(args).status.code().unwrap();
    assert_eq!(code(&["check", "--prop", "od", "--system", "g=P1"]), 0);
    assert_eq!(code(&["check", "--prop", "od", "--system", "g=P2"]), 1);
    assert_eq!(code(&["check", "--prop", "bogus", "--system", "g=P1"]), 2);
    assert_eq!(code(&["check", "--prop", "od", "--system", "g=nowhere.imp"]), 2);
    assert_eq!(
        code(&["check", "--prop", "od", "--system", "g=P1", "--cap-vertices", "5"]),
        3
    );
    assert_eq!(
        code(&["check", "--prop", "od", "--system", "g=P1", "--cap-states", "2"]),
        3
    );
}

#[test]
fn suite_command_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.manifest");
    std::fs::write(&path, "one P1 od expect=sat\ntwo P2 od expect=sat\n").unwrap();
    let out = hyperatl(&["suite", "--manifest", path.to_str().unwrap()]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(table.lines().any(|l| l.starts_with("one") && !l.contains("MISMATCH")));
    assert!(table.lines().any(|l| l.starts_with("two") && l.contains("MISMATCH")));

    let expect = dir.path().join("expect");
    std::fs::write(&expect, "two viol\n").unwrap();
    let out = hyperatl(&[
        "suite",
        "--manifest",
        path.to_str().unwrap(),
        "--expect",
        expect.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let empty = dir.path().join("empty.manifest");
    std::fs::write(&empty, "").unwrap();
    let out = hyperatl(&["suite", "--manifest", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn machine_report_has_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.txt");
    let out = hyperatl(&[
        "check",
        "--prop",
        "ni",
        "--system",
        "g=P2",
        "--machine",
        "--report",
        report.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout, std::fs::read_to_string(&report).unwrap());
    for key in [
        "verdict=satisfied",
        "structure.g.states=",
        "dpa.states=",
        "dpa.colors=",
        "game.vertices=",
        "game.edges=",
        "time.solve_ms=",
    ] {
        assert!(stdout.contains(key), "{key} missing from\n{stdout}");
    }
}
