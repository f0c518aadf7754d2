use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use hyperatl::{
    builtin_manifest, format_table, parse_expectations, parse_manifest, run, run_suite,
    CheckConfig, CliError, FormulaSource, PropSpec, SystemBinding,
};

#[derive(Parser)]
#[command(name = "hyperatl", version, about = "Model checker for strategic hyperproperties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check one formula against one or more systems.
    #[command(group(ArgGroup::new("spec").required(true).args(["formula", "prop"])))]
    Check {
        /// File holding a formula.
        #[arg(long)]
        formula: Option<PathBuf>,
        /// Built-in property: od, ni, simsec, sgni:k, od-async, ni-async[:r], ahltl:n.
        #[arg(long)]
        prop: Option<PropSpec>,
        /// LTL body for `ahltl:n`, over paths p1..pn.
        #[arg(long)]
        body: Option<String>,
        /// `<id>=<program>[,stutter][,shift=<k>]...`; the program is a
        /// built-in name (P1-P4, Q1, Q2, flip) or a file.
        #[arg(long = "system", required = true)]
        systems: Vec<SystemBinding>,
        /// `<var>=<n>`, applied to every program declaring `var`.
        #[arg(long = "width", value_parser = parse_width)]
        widths: Vec<(String, usize)>,
        #[arg(long, default_value_t = hyperatl_core::imp::DEFAULT_STATE_LIMIT)]
        cap_states: usize,
        #[arg(long, default_value_t = hyperatl_core::arena::DEFAULT_VERTEX_LIMIT)]
        cap_vertices: usize,
        /// Let `ni-async` run without an alignment proposition.
        #[arg(long)]
        allow_unaligned: bool,
        /// Build the game without skipping single-choice vertices.
        #[arg(long)]
        uncollapsed: bool,
        #[arg(long)]
        dump_dpa: Option<PathBuf>,
        /// Game with winners and strategy edges.
        #[arg(long)]
        dump_game: Option<PathBuf>,
        /// `<id>=<file>`.
        #[arg(long, value_parser = parse_dump)]
        dump_sys: Vec<(String, PathBuf)>,
        /// Write the key=value report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print the key=value report instead of the summary.
        #[arg(long)]
        machine: bool,
    },
    /// Run every check in a manifest (`sync`, `async` or a file).
    Suite {
        #[arg(long)]
        manifest: String,
        /// `<label> sat|viol` lines overriding the manifest's expectations.
        #[arg(long)]
        expect: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn parse_width(s: &str) -> Result<(String, usize), String> {
    let (var, n) = s.split_once('=').ok_or("expected <var>=<n>")?;
    let n = n.parse().map_err(|_| format!("bad width `{n}`"))?;
    Ok((var.to_string(), n))
}

fn parse_dump(s: &str) -> Result<(String, PathBuf), String> {
    let (id, path) = s.split_once('=').ok_or("expected <id>=<file>")?;
    Ok((id.to_string(), PathBuf::from(path)))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command) -> Result<u8, CliError> {
    match cmd {
        Command::Check {
            formula,
            prop,
            body,
            systems,
            widths,
            cap_states,
            cap_vertices,
            allow_unaligned,
            uncollapsed,
            dump_dpa,
            dump_game,
            dump_sys,
            report,
            machine,
        } => {
            let source = match (formula, prop) {
                (Some(f), _) => FormulaSource::File(f),
                (None, Some(prop)) => FormulaSource::Builtin { prop, body },
                (None, None) => unreachable!("required by the argument group"),
            };
            let mut cfg = CheckConfig::new(source, systems);
            cfg.widths = widths.into_iter().collect::<BTreeMap<_, _>>();
            cfg.cap_states = cap_states;
            cfg.cap_vertices = cap_vertices;
            cfg.allow_unaligned = allow_unaligned;
            cfg.uncollapsed = uncollapsed;
            cfg.dump_dpa = dump_dpa;
            cfg.dump_game = dump_game;
            cfg.dump_sys = dump_sys;
            let r = run(&cfg)?;
            if let Some(p) = report {
                std::fs::write(&p, r.to_record())
                    .map_err(|source| CliError::Io { path: p, source })?;
            }
            if machine {
                print!("{}", r.to_record());
            } else {
                print!("{}", r.to_human());
            }
            Ok(if r.satisfied { 0 } else { 1 })
        }
        Command::Suite {
            manifest,
            expect,
            threads,
        } => {
            let (text, dir) = match builtin_manifest(&manifest) {
                Some(t) => (t.to_string(), PathBuf::from(".")),
                None => {
                    let p = PathBuf::from(&manifest);
                    let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                    (read(&p)?, dir)
                }
            };
            let mut entries = parse_manifest(&text, &dir)?;
            if let Some(p) = expect {
                let overrides = parse_expectations(&read(&p)?)?;
                for e in &mut entries {
                    if let Some(&v) = overrides.get(&e.label) {
                        e.expect = Some(v);
                    }
                }
            }
            let threads = threads.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            let rows = run_suite(&entries, threads);
            print!("{}", format_table(&rows));
            let failed = rows.iter().filter(|r| !r.ok()).count();
            if failed > 0 {
                eprintln!("{failed} of {} checks failed or mismatched", rows.len());
                return Ok(1);
            }
            Ok(0)
        }
    }
}
