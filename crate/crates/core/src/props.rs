//! Generators for the benchmark properties.
//!
//! Every template renders formula text and hands it back to the parser, so
//! the grammar stays the only definition of the syntax. Path variables are
//! named `p1`, `p2`, ... and every quantifier names its structure with `@`.
//!
//! Recipes that have no builder but are expressible directly:
//!
//! * strategic non-interference, with the nondeterminism resolved by a
//!   strategy that sees only the low inputs:
//!   `[forall p1 @ g. <<xi_N>> p2 @ g.] G (l[0]{p1} <-> l[0]{p2}) & G (o[0]{p1} <-> o[0]{p2})`
//! * one-sided stuttering, where only the second copy may be delayed:
//!   `[forall p1 @ g. <<sched>> p2 @ g_stut.] G F !stut{p2} & G (o[0]{p1} <-> o[0]{p2})`
//!
//! Non-deducibility of strategies quantifies over strategies of the whole
//! system and is not expressible with a single quantifier block.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{parse_formula, FormulaError, HyperFormula, LtlFormula};
use crate::structures::Transform;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropError {
    #[error("{template}: the output proposition list is empty")]
    NoOutputs { template: &'static str },
    #[error("{template}: parameter `{param}` must be at least 1")]
    ZeroParameter {
        template: &'static str,
        param: &'static str,
    },
    #[error("system `{0}` has no declared derivation")]
    UnknownSystem(String),
    #[error("system `{system}` must be {expected}, but is {found}")]
    BindingMismatch {
        system: String,
        expected: String,
        found: String,
    },
    #[error("system `{0}` is not stutter-transformed")]
    NotStuttered(String),
    #[error(
        "ni-async: low inputs are compared but no alignment proposition was given; \
         without one the scheduler can misalign the reads and the property holds trivially"
    )]
    MissingAlignment,
    #[error("generated formula does not parse: {0}")]
    Formula(#[from] FormulaError),
}

/// How a named system was obtained: a base program and a transform chain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub base: String,
    pub transforms: Vec<Transform>,
}

impl Derivation {
    pub fn new(base: impl Into<String>, transforms: Vec<Transform>) -> Self {
        Derivation {
            base: base.into(),
            transforms,
        }
    }

    pub fn then(&self, t: Transform) -> Self {
        let mut out = self.clone();
        out.transforms.push(t);
        out
    }

    pub fn is_stuttered(&self) -> bool {
        self.transforms.contains(&Transform::Stutter)
    }
}

impl std::fmt::Display for Derivation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.base)?;
        for t in &self.transforms {
            write!(f, ",{t}")?;
        }
        Ok(())
    }
}

/// System name to derivation.
pub type Bindings = BTreeMap<String, Derivation>;

/// A rendered template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    pub name: String,
    pub text: String,
    pub formula: HyperFormula,
}

fn finish(name: String, text: String) -> Result<Expansion, PropError> {
    let formula = parse_formula(&text)?;
    Ok(Expansion {
        name,
        text,
        formula,
    })
}

fn iff(a: &str, pa: &str, b_prefix: &str, b: &str, pb: &str) -> String {
    format!("({a}{{{pa}}} <-> {b_prefix}{b}{{{pb}}})")
}

/// `a{p} <-> prefix a{q}` for every `a`, joined with `&`; `true` if empty.
fn matching(props: &[String], p: &str, prefix: &str, q: &str) -> String {
    if props.is_empty() {
        return "true".into();
    }
    props
        .iter()
        .map(|a| iff(a, p, prefix, a, q))
        .collect::<Vec<_>>()
        .join(" & ")
}

fn fair(var: &str) -> String {
    format!("G F !stut{{{var}}}")
}

fn derivation<'a>(bindings: &'a Bindings, sys: &str) -> Result<&'a Derivation, PropError> {
    bindings
        .get(sys)
        .ok_or_else(|| PropError::UnknownSystem(sys.to_string()))
}

fn expect_derived(
    bindings: &Bindings,
    sys: &str,
    derived: &str,
    t: Transform,
) -> Result<(), PropError> {
    let expected = derivation(bindings, sys)?.then(t);
    let found = derivation(bindings, derived)?;
    if *found != expected {
        return Err(PropError::BindingMismatch {
            system: derived.to_string(),
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

fn expect_stuttered(bindings: &Bindings, sys: &str) -> Result<(), PropError> {
    if !derivation(bindings, sys)?.is_stuttered() {
        return Err(PropError::NotStuttered(sys.to_string()));
    }
    Ok(())
}

fn nonempty(template: &'static str, outputs: &[String]) -> Result<(), PropError> {
    if outputs.is_empty() {
        return Err(PropError::NoOutputs { template });
    }
    Ok(())
}

/// Observational determinism: `[forall p1. forall p2.] /\_a G (a{p1} <-> a{p2})`.
pub fn expand_od(outputs: &[String], sys: &str) -> Result<Expansion, PropError> {
    nonempty("od", outputs)?;
    let body: Vec<String> = outputs
        .iter()
        .map(|a| format!("G {}", iff(a, "p1", "", a, "p2")))
        .collect();
    finish(
        "od".into(),
        format!(
            "[forall p1 @ {sys}. forall p2 @ {sys}.] {}",
            body.join(" & ")
        ),
    )
}

/// Non-interference: equal low inputs force equal outputs.
pub fn expand_ni(outputs: &[String], lows: &[String], sys: &str) -> Result<Expansion, PropError> {
    nonempty("ni", outputs)?;
    finish(
        "ni".into(),
        format!(
            "[forall p1 @ {sys}. forall p2 @ {sys}.] (G ({})) -> G ({})",
            matching(lows, "p1", "", "p2"),
            matching(outputs, "p1", "", "p2")
        ),
    )
}

/// Simulation security: the nondeterminism of a copy running one step
/// behind has a strategy to match the first copy.
pub fn expand_simsec(
    outputs: &[String],
    lows: &[String],
    sys: &str,
    sys_shift: &str,
    bindings: &Bindings,
) -> Result<Expansion, PropError> {
    nonempty("simsec", outputs)?;
    expect_derived(bindings, sys, sys_shift, Transform::Shift(1))?;
    finish(
        "simsec".into(),
        format!(
            "[forall p1 @ {sys}. <<xi_N>> p2 @ {sys_shift}.] (G ({})) -> G ({})",
            matching(lows, "p1", "X ", "p2"),
            matching(outputs, "p1", "X ", "p2")
        ),
    )
}

/// Game-based generalized non-interference with a `k`-step lookahead for
/// the witness copy `p3`.
///
/// `p3` takes the high inputs of `p1` and the low inputs and outputs of
/// `p2`.
pub fn expand_sgni(
    outputs: &[String],
    lows: &[String],
    highs: &[String],
    k: usize,
    sys: &str,
    sys_shift_k: &str,
    bindings: &Bindings,
) -> Result<Expansion, PropError> {
    nonempty("sgni", outputs)?;
    if k == 0 {
        return Err(PropError::ZeroParameter {
            template: "sgni",
            param: "k",
        });
    }
    expect_derived(bindings, sys, sys_shift_k, Transform::Shift(k))?;
    let ahead = if k == 1 {
        "X ".to_string()
    } else {
        format!("X[{k}] ")
    };
    let mut rest = outputs.to_vec();
    rest.extend_from_slice(lows);
    finish(
        format!("sgni:{k}"),
        format!(
            "[forall p1 @ {sys}. forall p2 @ {sys}. exists p3 @ {sys_shift_k}.] G ({}) & G ({})",
            matching(highs, "p1", &ahead, "p3"),
            matching(&rest, "p2", &ahead, "p3")
        ),
    )
}

/// Observational determinism up to scheduling: the schedulers of both
/// copies align the outputs, fairly.
pub fn expand_od_async(
    outputs: &[String],
    sys_stut: &str,
    bindings: &Bindings,
) -> Result<Expansion, PropError> {
    nonempty("od-async", outputs)?;
    expect_stuttered(bindings, sys_stut)?;
    finish(
        "od-async".into(),
        format!(
            "[<<sched>> p1 @ {sys_stut}. <<sched>> p2 @ {sys_stut}.] G ({}) & {} & {}",
            matching(outputs, "p1", "", "p2"),
            fair("p1"),
            fair("p2")
        ),
    )
}

/// Asynchronous non-interference. The schedulers must keep the alignment
/// propositions equal, which stops them from misaligning the low reads.
///
/// With low inputs present, an empty `align` is rejected unless
/// `allow_unaligned` is set.
pub fn expand_ni_async(
    outputs: &[String],
    lows: &[String],
    align: &[String],
    allow_unaligned: bool,
    sys_stut: &str,
    bindings: &Bindings,
) -> Result<Expansion, PropError> {
    nonempty("ni-async", outputs)?;
    if align.is_empty() && !lows.is_empty() && !allow_unaligned {
        return Err(PropError::MissingAlignment);
    }
    expect_stuttered(bindings, sys_stut)?;
    let mut text = format!(
        "[<<sched>> p1 @ {sys_stut}. <<sched>> p2 @ {sys_stut}.] ((G ({})) -> G ({})) & {} & {}",
        matching(lows, "p1", "", "p2"),
        matching(outputs, "p1", "", "p2"),
        fair("p1"),
        fair("p2")
    );
    if !align.is_empty() {
        text.push_str(&format!(" & G ({})", matching(align, "p1", "", "p2")));
    }
    finish("ni-async".into(), text)
}

/// `n` scheduler-coalition copies of a stuttered structure, checking `body`
/// (over `p1..pn`) together with fairness of every copy.
pub fn expand_ahltl(
    n: usize,
    body: &LtlFormula,
    sys_stut: &str,
    bindings: &Bindings,
) -> Result<Expansion, PropError> {
    if n == 0 {
        return Err(PropError::ZeroParameter {
            template: "ahltl",
            param: "n",
        });
    }
    expect_stuttered(bindings, sys_stut)?;
    let block: String = (1..=n)
        .map(|i| format!("<<sched>> p{i} @ {sys_stut}. "))
        .collect();
    let fairness: Vec<String> = (1..=n).map(|i| fair(&format!("p{i}"))).collect();
    finish(
        format!("ahltl:{n}"),
        format!("[{}] ({body}) & {}", block.trim_end(), fairness.join(" & ")),
    )
}
