//! Batch runs over a manifest.
//!
//! A manifest has one check per line: `<label> <system> <property>
//! [options]`, where `<system>` is `prog[,stutter][,shift=k]...` and the
//! options are `width=var:n,...`, `expect=sat|viol` and `allow-unaligned`.
//! `#` starts a comment. Relative program paths are resolved against the
//! manifest's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::{builtin_program, run, CheckConfig, CliError, FormulaSource, PropSpec, Report, SystemBinding};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub label: String,
    pub config: CheckConfig,
    pub expect: Option<bool>,
}

fn parse_verdict(s: &str) -> Option<bool> {
    match s {
        "sat" | "satisfied" => Some(true),
        "viol" | "violated" => Some(false),
        _ => None,
    }
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let mut out: Vec<ManifestEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| CliError::Manifest { line, message };
        let content = raw.split('#').next().unwrap_or_default();
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [label, system, prop, options @ ..] = fields.as_slice() else {
            return Err(err("expected `<label> <system> <property> [options]`".into()));
        };
        if out.iter().any(|e| e.label == *label) {
            return Err(err(format!("duplicate label `{label}`")));
        }
        let mut binding =
            SystemBinding::parse_chain("g", system).map_err(|e| err(e.to_string()))?;
        if builtin_program(&binding.program).is_none() && Path::new(&binding.program).is_relative() {
            binding.program = base_dir.join(&binding.program).to_string_lossy().into_owned();
        }
        let prop: PropSpec = prop.parse().map_err(|e: CliError| err(e.to_string()))?;
        let mut config = CheckConfig::new(
            FormulaSource::Builtin { prop, body: None },
            vec![binding],
        );
        let mut expect = None;
        for opt in options {
            match opt.split_once('=') {
                Some(("expect", v)) => {
                    expect = Some(
                        parse_verdict(v).ok_or_else(|| err(format!("bad verdict `{v}`")))?,
                    );
                }
                Some(("width", list)) => {
                    for item in list.split(',') {
                        let (var, n) = item
                            .split_once(':')
                            .ok_or_else(|| err(format!("bad width `{item}`")))?;
                        let n = n.parse().map_err(|_| err(format!("bad width `{item}`")))?;
                        config.widths.insert(var.to_string(), n);
                    }
                }
                None if *opt == "allow-unaligned" => config.allow_unaligned = true,
                _ => return Err(err(format!("unknown option `{opt}`"))),
            }
        }
        out.push(ManifestEntry {
            label: label.to_string(),
            config,
            expect,
        });
    }
    Ok(out)
}

/// Reads `<label> sat|viol` lines.
pub fn parse_expectations(text: &str) -> Result<BTreeMap<String, bool>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or_default();
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            [label, v] => {
                let v = parse_verdict(v).ok_or_else(|| CliError::Manifest {
                    line: i + 1,
                    message: format!("bad verdict `{v}`"),
                })?;
                out.insert(label.to_string(), v);
            }
            _ => {
                return Err(CliError::Manifest {
                    line: i + 1,
                    message: "expected `<label> sat|viol`".into(),
                })
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct SuiteRow {
    pub label: String,
    pub result: Result<Report, CliError>,
    pub expect: Option<bool>,
}

impl SuiteRow {
    /// False on errors and on verdicts that differ from the expectation.
    pub fn ok(&self) -> bool {
        match (&self.result, self.expect) {
            (Err(_), _) => false,
            (Ok(r), Some(e)) => r.satisfied == e,
            (Ok(_), None) => true,
        }
    }
}

/// Checks every entry, `threads` at a time; rows come back in manifest
/// order.
pub fn run_suite(entries: &[ManifestEntry], threads: usize) -> Vec<SuiteRow> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Report, CliError>>>> =
        Mutex::new((0..entries.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(entries.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(entry) = entries.get(i) else { break };
                let r = run(&entry.config);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let results = results.into_inner().unwrap();
    entries
        .iter()
        .zip(results)
        .map(|(e, r)| SuiteRow {
            label: e.label.clone(),
            result: r.expect("every entry is checked"),
            expect: e.expect,
        })
        .collect()
}

/// Plain-text table: label, verdict, expectation, game size and time.
pub fn format_table(rows: &[SuiteRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:width$}  {:9}  {:6}  {:>9}  {:>8}\n",
        "label", "verdict", "expect", "vertices", "ms"
    );
    for row in rows {
        let expect = match row.expect {
            Some(true) => "sat",
            Some(false) => "viol",
            None => "-",
        };
        let mark = if row.ok() { "" } else { "  MISMATCH" };
        match &row.result {
            Ok(r) => {
                let t = &r.timings;
                let ms = t.build_ms + t.translate_ms + t.arena_ms + t.solve_ms;
                let _ = writeln!(
                    out,
                    "{:width$}  {:9}  {:6}  {:>9}  {:>8}{mark}",
                    row.label,
                    r.verdict(),
                    expect,
                    r.game_vertices,
                    ms
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{:width$}  {:9}  {:6}  error: {e}{mark}", row.label, "error", expect);
            }
        }
    }
    out
}
