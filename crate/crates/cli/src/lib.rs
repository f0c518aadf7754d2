//! Driver for the `hyperatl` command: loads programs and a formula, applies
//! transforms, builds the parity game and reports the verdict.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use hyperatl_core::arena::{build_game, ArenaError, ArenaOptions, Collapse, Quant, DEFAULT_VERTEX_LIMIT};
use hyperatl_core::formula::{
    parse_formula, parse_ltl, validate_fragment, FormulaError, HyperFormula,
};
use hyperatl_core::imp::{self, build_cgs, parse_program_with_widths, ImpError, ParsedProgram};
use hyperatl_core::ltl2dpa::{ltl_to_dpa_with_stats, AutomatonError};
use hyperatl_core::props::{self, Bindings, Derivation, PropError};
use hyperatl_core::solver::zielonka;
use hyperatl_core::structures::{apply_transforms, export_dot, Mscgs, StructureError, Transform};
use thiserror::Error;

pub mod suite;

pub use suite::{format_table, parse_expectations, parse_manifest, run_suite, ManifestEntry, SuiteRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("imp: {0}")]
    Imp(#[from] ImpError),
    #[error("formula: {0}")]
    Formula(#[from] FormulaError),
    #[error("structures: {0}")]
    Structure(#[from] StructureError),
    #[error("props: {0}")]
    Prop(#[from] PropError),
    #[error("ltl2dpa: {0}")]
    Automaton(#[from] AutomatonError),
    #[error("arena: {0}")]
    Arena(#[from] ArenaError),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

impl CliError {
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            CliError::Imp(ImpError::StateLimit { .. })
                | CliError::Automaton(
                    AutomatonError::StateLimit { .. }
                        | AutomatonError::TooManyAtoms { .. }
                        | AutomatonError::TooManyApaStates { .. }
                )
                | CliError::Arena(ArenaError::VertexLimit { .. } | ArenaError::EdgeOverflow)
        )
    }

    /// 3 for exceeded resource caps, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_resource() {
            3
        } else {
            2
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Programs shipped with the binary, looked up case-insensitively.
pub const BUILTIN_PROGRAMS: &[(&str, &str)] = &[
    ("P1", include_str!("../assets/p1.imp")),
    ("P2", include_str!("../assets/p2.imp")),
    ("P3", include_str!("../assets/p3.imp")),
    ("P4", include_str!("../assets/p4.imp")),
    ("Q1", include_str!("../assets/q1.imp")),
    ("Q2", include_str!("../assets/q2.imp")),
    ("flip", include_str!("../assets/flip.imp")),
];

pub const BUILTIN_MANIFESTS: &[(&str, &str)] = &[
    ("sync", include_str!("../assets/sync.manifest")),
    ("async", include_str!("../assets/async.manifest")),
];

pub fn builtin_program(name: &str) -> Option<&'static str> {
    BUILTIN_PROGRAMS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, text)| *text)
}

pub fn builtin_manifest(name: &str) -> Option<&'static str> {
    BUILTIN_MANIFESTS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// A named structure: a program (built-in name or file) and a transform
/// chain. Written `id=prog[,stutter][,shift=k]...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemBinding {
    pub id: String,
    pub program: String,
    pub transforms: Vec<Transform>,
}

impl SystemBinding {
    /// Parses the part after `id=`.
    pub fn parse_chain(id: &str, spec: &str) -> Result<Self, CliError> {
        let mut parts = spec.split(',').map(str::trim);
        let program = parts.next().unwrap_or_default();
        if program.is_empty() {
            return Err(CliError::Usage(format!("system `{id}` names no program")));
        }
        let transforms = parts
            .map(|t| match t.split_once('=') {
                None if t == "stutter" => Ok(Transform::Stutter),
                Some(("shift", k)) => k
                    .parse()
                    .map(Transform::Shift)
                    .map_err(|_| CliError::Usage(format!("bad shift length `{k}`"))),
                _ => Err(CliError::Usage(format!(
                    "unknown transform `{t}` (expected `stutter` or `shift=<k>`)"
                ))),
            })
            .collect::<Result<_, _>>()?;
        Ok(SystemBinding {
            id: id.to_string(),
            program: program.to_string(),
            transforms,
        })
    }
}

impl FromStr for SystemBinding {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (id, spec) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected `<id>=<program>...`, got `{s}`")))?;
        SystemBinding::parse_chain(id.trim(), spec)
    }
}

/// A built-in property with its parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropSpec {
    Od,
    Ni,
    SimSec,
    Sgni(usize),
    OdAsync,
    /// Optional alignment variable or proposition.
    NiAsync(Option<String>),
    Ahltl(usize),
}

impl FromStr for PropSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let number = |what: &str| -> Result<usize, CliError> {
            let p = param.ok_or_else(|| CliError::Usage(format!("`{name}` needs `:{what}`")))?;
            p.parse()
                .map_err(|_| CliError::Usage(format!("bad {what} `{p}` for `{name}`")))
        };
        let no_param = |spec: PropSpec| match param {
            Some(_) => Err(CliError::Usage(format!("`{name}` takes no parameter"))),
            None => Ok(spec),
        };
        match name {
            "od" => no_param(PropSpec::Od),
            "ni" => no_param(PropSpec::Ni),
            "simsec" => no_param(PropSpec::SimSec),
            "sgni" if param.is_none() => Ok(PropSpec::Sgni(3)),
            "sgni" => Ok(PropSpec::Sgni(number("k")?)),
            "od-async" => no_param(PropSpec::OdAsync),
            "ni-async" => Ok(PropSpec::NiAsync(param.map(str::to_string))),
            "ahltl" => Ok(PropSpec::Ahltl(number("n")?)),
            _ => Err(CliError::Usage(format!(
                "unknown property `{name}` (known: od, ni, simsec, sgni:k, od-async, ni-async:r, ahltl:n)"
            ))),
        }
    }
}

impl fmt::Display for PropSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropSpec::Od => f.write_str("od"),
            PropSpec::Ni => f.write_str("ni"),
            PropSpec::SimSec => f.write_str("simsec"),
            PropSpec::Sgni(k) => write!(f, "sgni:{k}"),
            PropSpec::OdAsync => f.write_str("od-async"),
            PropSpec::NiAsync(None) => f.write_str("ni-async"),
            PropSpec::NiAsync(Some(r)) => write!(f, "ni-async:{r}"),
            PropSpec::Ahltl(n) => write!(f, "ahltl:{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaSource {
    Text(String),
    File(PathBuf),
    /// `body` is the LTL body for `ahltl:n`.
    Builtin {
        prop: PropSpec,
        body: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub formula: FormulaSource,
    pub systems: Vec<SystemBinding>,
    /// Width overrides applied to every program that declares the variable.
    pub widths: BTreeMap<String, usize>,
    pub cap_states: usize,
    pub cap_vertices: usize,
    /// Build the uncollapsed arena instead (for cross-checking).
    pub uncollapsed: bool,
    /// Accept `ni-async` without an alignment proposition.
    pub allow_unaligned: bool,
    pub dump_dpa: Option<PathBuf>,
    pub dump_game: Option<PathBuf>,
    pub dump_sys: Vec<(String, PathBuf)>,
}

impl CheckConfig {
    pub fn new(formula: FormulaSource, systems: Vec<SystemBinding>) -> Self {
        CheckConfig {
            formula,
            systems,
            widths: BTreeMap::new(),
            cap_states: imp::DEFAULT_STATE_LIMIT,
            cap_vertices: DEFAULT_VERTEX_LIMIT,
            uncollapsed: false,
            allow_unaligned: false,
            dump_dpa: None,
            dump_game: None,
            dump_sys: Vec::new(),
        }
    }

    pub fn builtin(prop: PropSpec, program: &str) -> Self {
        CheckConfig::new(
            FormulaSource::Builtin { prop, body: None },
            vec![SystemBinding {
                id: "g".into(),
                program: program.into(),
                transforms: Vec::new(),
            }],
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Timings {
    pub build_ms: u128,
    pub translate_ms: u128,
    pub arena_ms: u128,
    pub solve_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub satisfied: bool,
    pub formula: String,
    /// States per structure id, in binding order.
    pub structures: Vec<(String, usize)>,
    pub dpa_states: usize,
    pub dpa_colors: usize,
    pub game_vertices: usize,
    pub game_edges: usize,
    /// Vertices won by player 0.
    pub winning_vertices: usize,
    pub timings: Timings,
}

impl Report {
    pub fn verdict(&self) -> &'static str {
        if self.satisfied {
            "satisfied"
        } else {
            "violated"
        }
    }

    /// Flat `key=value` record, one field per line. Timing fields are
    /// prefixed with `time.` so that they can be filtered out.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verdict={}", self.verdict());
        let _ = writeln!(out, "formula={}", self.formula.trim());
        for (id, n) in &self.structures {
            let _ = writeln!(out, "structure.{id}.states={n}");
        }
        let _ = writeln!(out, "dpa.states={}", self.dpa_states);
        let _ = writeln!(out, "dpa.colors={}", self.dpa_colors);
        let _ = writeln!(out, "game.vertices={}", self.game_vertices);
        let _ = writeln!(out, "game.edges={}", self.game_edges);
        let _ = writeln!(out, "game.won_by_0={}", self.winning_vertices);
        let t = &self.timings;
        let _ = writeln!(out, "time.build_ms={}", t.build_ms);
        let _ = writeln!(out, "time.translate_ms={}", t.translate_ms);
        let _ = writeln!(out, "time.arena_ms={}", t.arena_ms);
        let _ = writeln!(out, "time.solve_ms={}", t.solve_ms);
        out
    }

    pub fn to_human(&self) -> String {
        let mut out = format!("{}\n  formula: {}\n", self.verdict(), self.formula.trim());
        for (id, n) in &self.structures {
            let _ = writeln!(out, "  structure {id}: {n} states");
        }
        let _ = writeln!(
            out,
            "  dpa: {} states, {} colors\n  game: {} vertices, {} edges",
            self.dpa_states, self.dpa_colors, self.game_vertices, self.game_edges
        );
        let t = &self.timings;
        let _ = writeln!(
            out,
            "  time (ms): build {}, translate {}, arena {}, solve {}",
            t.build_ms, t.translate_ms, t.arena_ms, t.solve_ms
        );
        out
    }
}

fn program_text(name: &str) -> Result<String, CliError> {
    if let Some(text) = builtin_program(name) {
        return Ok(text.to_string());
    }
    let path = Path::new(name);
    std::fs::read_to_string(path).map_err(io_error(path))
}

/// Structures by id, with their derivations and the parsed base programs.
struct Systems {
    structures: BTreeMap<String, Mscgs>,
    bindings: Bindings,
    order: Vec<String>,
    programs: BTreeMap<String, ParsedProgram>,
    bases: BTreeMap<String, Mscgs>,
}

impl Systems {
    fn load(cfg: &CheckConfig) -> Result<Self, CliError> {
        let mut sys = Systems {
            structures: BTreeMap::new(),
            bindings: Bindings::new(),
            order: Vec::new(),
            programs: BTreeMap::new(),
            bases: BTreeMap::new(),
        };
        for b in &cfg.systems {
            if sys.structures.contains_key(&b.id) {
                return Err(CliError::Usage(format!("system `{}` bound twice", b.id)));
            }
            if !sys.programs.contains_key(&b.program) {
                let parsed = parse_program_with_widths(&program_text(&b.program)?, &cfg.widths)?;
                let base = build_cgs(&parsed, cfg.cap_states)?.structure;
                sys.programs.insert(b.program.clone(), parsed);
                sys.bases.insert(b.program.clone(), base);
            }
            let g = apply_transforms(&sys.bases[&b.program], &b.transforms)?;
            sys.structures.insert(b.id.clone(), g);
            sys.bindings.insert(
                b.id.clone(),
                Derivation::new(b.program.clone(), b.transforms.clone()),
            );
            sys.order.push(b.id.clone());
        }
        Ok(sys)
    }

    /// The id of a structure derived from `base` by `t`, adding one named
    /// `<base>_<suffix>` if none is bound.
    fn derived(&mut self, base: &str, t: Transform, suffix: &str) -> Result<String, CliError> {
        let want = self.bindings[base].then(t);
        if let Some((id, _)) = self.bindings.iter().find(|(_, d)| **d == want) {
            return Ok(id.clone());
        }
        let id = format!("{base}_{suffix}");
        if self.structures.contains_key(&id) {
            return Err(CliError::Usage(format!(
                "system `{id}` is bound but is not {want}"
            )));
        }
        let g = t.apply(&self.structures[base])?;
        self.structures.insert(id.clone(), g);
        self.bindings.insert(id.clone(), want);
        self.order.push(id.clone());
        Ok(id)
    }

    /// Propositions of variable `var` of the program behind `id`, or `var`
    /// itself if it already names a proposition.
    fn var_props(&self, id: &str, var: &str) -> Vec<String> {
        let g = &self.structures[id];
        if g.prop_index(var).is_some() {
            return vec![var.to_string()];
        }
        let parsed = &self.programs[&self.bindings[id].base];
        match parsed.decls.index(var) {
            Some(v) => (0..parsed.decls.width(v))
                .map(|i| format!("{var}[{i}]"))
                .collect(),
            None => Vec::new(),
        }
    }
}

fn expand_builtin(
    prop: &PropSpec,
    body: Option<&str>,
    sys: &mut Systems,
    allow_unaligned: bool,
) -> Result<HyperFormula, CliError> {
    let base = sys
        .order
        .first()
        .cloned()
        .ok_or_else(|| CliError::Usage("no system bound".into()))?;
    let o = sys.var_props(&base, "o");
    let l = sys.var_props(&base, "l");
    let h = sys.var_props(&base, "h");
    let stuttered = |sys: &mut Systems| -> Result<String, CliError> {
        if sys.bindings[&base].is_stuttered() {
            Ok(base.clone())
        } else {
            sys.derived(&base, Transform::Stutter, "stut")
        }
    };
    let expansion = match prop {
        PropSpec::Od => props::expand_od(&o, &base)?,
        PropSpec::Ni => props::expand_ni(&o, &l, &base)?,
        PropSpec::SimSec => {
            let shifted = sys.derived(&base, Transform::Shift(1), "shift1")?;
            props::expand_simsec(&o, &l, &base, &shifted, &sys.bindings)?
        }
        PropSpec::Sgni(k) => {
            if *k == 0 {
                return Err(PropError::ZeroParameter {
                    template: "sgni",
                    param: "k",
                }
                .into());
            }
            let shifted = sys.derived(&base, Transform::Shift(*k), &format!("shift{k}"))?;
            props::expand_sgni(&o, &l, &h, *k, &base, &shifted, &sys.bindings)?
        }
        PropSpec::OdAsync => {
            let s = stuttered(sys)?;
            props::expand_od_async(&o, &s, &sys.bindings)?
        }
        PropSpec::NiAsync(r) => {
            let align = match r {
                Some(r) => {
                    let a = sys.var_props(&base, r);
                    if a.is_empty() {
                        return Err(CliError::Usage(format!(
                            "alignment `{r}` is neither a variable nor a proposition of `{base}`"
                        )));
                    }
                    a
                }
                None => Vec::new(),
            };
            let s = stuttered(sys)?;
            props::expand_ni_async(&o, &l, &align, allow_unaligned, &s, &sys.bindings)?
        }
        PropSpec::Ahltl(n) => {
            let body = body.ok_or_else(|| CliError::Usage("ahltl needs --body".into()))?;
            let body = parse_ltl(body)?;
            let s = stuttered(sys)?;
            props::expand_ahltl(*n, &body, &s, &sys.bindings)?
        }
    };
    Ok(expansion.formula)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_error(path))
}

/// Runs one check end to end.
pub fn run(cfg: &CheckConfig) -> Result<Report, CliError> {
    let t0 = Instant::now();
    let mut sys = Systems::load(cfg)?;
    let formula = match &cfg.formula {
        FormulaSource::Text(t) => parse_formula(t)?,
        FormulaSource::File(p) => parse_formula(&std::fs::read_to_string(p).map_err(io_error(p))?)?,
        FormulaSource::Builtin { prop, body } => {
            expand_builtin(prop, body.as_deref(), &mut sys, cfg.allow_unaligned)?
        }
    };
    let info = validate_fragment(&formula, &sys.structures, sys.order.first().map(String::as_str))?;
    let build_ms = t0.elapsed().as_millis();

    let t1 = Instant::now();
    let (dpa, _) = ltl_to_dpa_with_stats(&formula.body, hyperatl_core::ltl2dpa::DEFAULT_STATE_LIMIT)?;
    let translate_ms = t1.elapsed().as_millis();

    let t2 = Instant::now();
    let quants: Vec<Quant> = info
        .quantifiers
        .iter()
        .map(|q| Quant {
            structure: &sys.structures[&q.system],
            coalition: &q.coalition,
        })
        .collect();
    let opts = ArenaOptions {
        collapse: if cfg.uncollapsed {
            Collapse::Off
        } else {
            Collapse::SingleChoice
        },
        vertex_limit: cfg.cap_vertices,
        labels: cfg.dump_game.is_some(),
    };
    let arena = build_game(&quants, &dpa, &info.atom_to_copy, opts)?;
    let arena_ms = t2.elapsed().as_millis();

    let t3 = Instant::now();
    let solution = zielonka(&arena.game);
    let solve_ms = t3.elapsed().as_millis();
    let won = solution.winner[arena.game.initial as usize] == 0;

    if let Some(p) = &cfg.dump_dpa {
        write_file(p, &dpa.to_dot())?;
    }
    if let Some(p) = &cfg.dump_game {
        write_file(p, &arena.game.to_dot(arena.labels.as_deref(), Some(&solution)))?;
    }
    for (id, p) in &cfg.dump_sys {
        let g = sys
            .structures
            .get(id)
            .ok_or_else(|| CliError::Usage(format!("--dump-sys names unknown system `{id}`")))?;
        write_file(p, &export_dot(g))?;
    }

    Ok(Report {
        satisfied: won != formula.negated,
        formula: formula.to_string(),
        structures: sys
            .order
            .iter()
            .map(|id| (id.clone(), sys.structures[id].num_states()))
            .collect(),
        dpa_states: dpa.num_states(),
        dpa_colors: dpa.num_colors(),
        game_vertices: arena.game.num_vertices(),
        game_edges: arena.game.num_edges(),
        winning_vertices: solution.winner.iter().filter(|&&w| w == 0).count(),
        timings: Timings {
            build_ms,
            translate_ms,
            arena_ms,
            solve_ms,
        },
    })
}
