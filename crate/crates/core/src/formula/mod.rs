//! Abstract syntax, parsing, negation normal form and fragment validation
//! for strategic hyperproperties of the shape `[<<A1>> p1. ... <<Ak>> pk.] body`.

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::structures::Mscgs;

pub use parser::{parse_formula, parse_ltl, Position};

/// Name of a path variable bound by a quantifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathVar(String);

impl PathVar {
    pub fn new(name: impl Into<String>) -> Self {
        PathVar(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PathVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which agents a quantifier hands to the strategy.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AgentSpec {
    /// Empty coalition.
    Forall,
    /// Every agent of the bound structure.
    Exists,
    /// A nonempty, explicitly named set of agents.
    Coalition(BTreeSet<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quantifier {
    pub spec: AgentSpec,
    pub var: PathVar,
    /// Structure the path is drawn from; `None` means the default system.
    pub system: Option<String>,
}

/// An atomic proposition evaluated on one path, written `prop{var}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub prop: String,
    pub var: PathVar,
}

impl Atom {
    pub fn new(prop: impl Into<String>, var: impl Into<String>) -> Self {
        Atom {
            prop: prop.into(),
            var: PathVar::new(var),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{}}}", self.prop, self.var)
    }
}

/// Quantifier-free body.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LtlFormula {
    True,
    False,
    Atom(Atom),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Iff(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    Release(Box<LtlFormula>, Box<LtlFormula>),
    Globally(Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
}

// Small constructors; they keep the builders in `props` and the tests readable.
impl LtlFormula {
    pub fn atom(prop: impl Into<String>, var: impl Into<String>) -> Self {
        LtlFormula::Atom(Atom::new(prop, var))
    }

    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(l: LtlFormula, r: LtlFormula) -> Self {
        LtlFormula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: LtlFormula, r: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: LtlFormula, r: LtlFormula) -> Self {
        LtlFormula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: LtlFormula, r: LtlFormula) -> Self {
        LtlFormula::Iff(Box::new(l), Box::new(r))
    }

    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }

    /// `k` nested next operators.
    pub fn next_n(k: usize, mut f: LtlFormula) -> Self {
        for _ in 0..k {
            f = LtlFormula::next(f);
        }
        f
    }

    pub fn until(l: LtlFormula, r: LtlFormula) -> Self {
        LtlFormula::Until(Box::new(l), Box::new(r))
    }

    pub fn release(l: LtlFormula, r: LtlFormula) -> Self {
        LtlFormula::Release(Box::new(l), Box::new(r))
    }

    pub fn globally(f: LtlFormula) -> Self {
        LtlFormula::Globally(Box::new(f))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }

    /// Conjunction of all items, `true` for none.
    pub fn conjunction(items: impl IntoIterator<Item = LtlFormula>) -> Self {
        items
            .into_iter()
            .reduce(LtlFormula::and)
            .unwrap_or(LtlFormula::True)
    }

    /// Number of syntax tree nodes.
    pub fn size(&self) -> usize {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => 1,
            Not(a) | Next(a) | Globally(a) | Eventually(a) => 1 + a.size(),
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) | Until(a, b) | Release(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// True when negations sit only on atoms and no `->`/`<->` remains.
    pub fn is_nnf(&self) -> bool {
        use LtlFormula::*;
        match self {
            True | False | Atom(_) => true,
            Not(a) => matches!(**a, Atom(_)),
            Implies(..) | Iff(..) => false,
            Next(a) | Globally(a) | Eventually(a) => a.is_nnf(),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => a.is_nnf() && b.is_nnf(),
        }
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use LtlFormula::*;
        match self {
            True => f.write_str("true"),
            False => f.write_str("false"),
            Atom(a) => write!(f, "{a}"),
            Not(a) => write!(f, "!{a}"),
            Next(a) => write!(f, "X {a}"),
            Globally(a) => write!(f, "G {a}"),
            Eventually(a) => write!(f, "F {a}"),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            Iff(a, b) => write!(f, "({a} <-> {b})"),
            Until(a, b) => write!(f, "({a} U {b})"),
            Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

/// A quantifier block followed by a quantifier-free body.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HyperFormula {
    /// Negation of the whole block, resolved by flipping the game winner.
    pub negated: bool,
    pub block: Vec<Quantifier>,
    pub bracketed: bool,
    pub body: LtlFormula,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            AgentSpec::Forall => f.write_str("forall ")?,
            AgentSpec::Exists => f.write_str("exists ")?,
            AgentSpec::Coalition(agents) => {
                let names: Vec<&str> = agents.iter().map(String::as_str).collect();
                write!(f, "<<{}>> ", names.join(", "))?;
            }
        }
        write!(f, "{}", self.var)?;
        if let Some(sys) = &self.system {
            write!(f, " @ {sys}")?;
        }
        f.write_str(" .")
    }
}

impl fmt::Display for HyperFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        if self.bracketed {
            f.write_str("[")?;
        }
        for q in &self.block {
            write!(f, " {q}")?;
        }
        if self.bracketed {
            f.write_str(" ]")?;
        }
        write!(f, " {}", self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Position, message: String },
    #[error("unbound path variable `{var}` at {pos}")]
    UnboundVariable { var: String, pos: Position },
    #[error("duplicate path variable `{var}` at {pos}")]
    DuplicateVariable { var: String, pos: Position },
    #[error("unsupported fragment at {pos}: {message}")]
    UnsupportedFragment { pos: Position, message: String },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("quantifier over `{var}` has no system and no default system was supplied")]
    MissingDefaultSystem { var: String },
    #[error("agent `{agent}` does not exist in system `{system}`")]
    UnknownAgent { agent: String, system: String },
    #[error("proposition `{prop}` (path `{var}`) does not exist in system `{system}`")]
    UnknownProposition {
        prop: String,
        var: String,
        system: String,
    },
}

/// Negation normal form: negations only on atoms, `->` and `<->` expanded.
///
/// Linear in the input except for `<->`, whose operands occur twice.
pub fn to_nnf(f: &LtlFormula) -> LtlFormula {
    nnf(f, false)
}

fn nnf(f: &LtlFormula, neg: bool) -> LtlFormula {
    use LtlFormula as L;
    match (f, neg) {
        (L::True, false) | (L::False, true) => L::True,
        (L::True, true) | (L::False, false) => L::False,
        (L::Atom(a), false) => L::Atom(a.clone()),
        (L::Atom(a), true) => L::not(L::Atom(a.clone())),
        (L::Not(a), _) => nnf(a, !neg),
        (L::And(a, b), false) | (L::Or(a, b), true) => L::and(nnf(a, neg), nnf(b, neg)),
        (L::Or(a, b), false) | (L::And(a, b), true) => L::or(nnf(a, neg), nnf(b, neg)),
        (L::Implies(a, b), false) => L::or(nnf(a, true), nnf(b, false)),
        (L::Implies(a, b), true) => L::and(nnf(a, false), nnf(b, true)),
        (L::Iff(a, b), false) => L::or(
            L::and(nnf(a, false), nnf(b, false)),
            L::and(nnf(a, true), nnf(b, true)),
        ),
        (L::Iff(a, b), true) => L::or(
            L::and(nnf(a, false), nnf(b, true)),
            L::and(nnf(a, true), nnf(b, false)),
        ),
        (L::Next(a), _) => L::next(nnf(a, neg)),
        (L::Until(a, b), false) | (L::Release(a, b), true) => L::until(nnf(a, neg), nnf(b, neg)),
        (L::Release(a, b), false) | (L::Until(a, b), true) => {
            L::release(nnf(a, neg), nnf(b, neg))
        }
        (L::Globally(a), false) | (L::Eventually(a), true) => L::globally(nnf(a, neg)),
        (L::Eventually(a), false) | (L::Globally(a), true) => L::eventually(nnf(a, neg)),
    }
}

/// Atoms in order of first occurrence, left to right.
pub fn collect_atoms(f: &LtlFormula) -> Vec<Atom> {
    fn walk(f: &LtlFormula, out: &mut Vec<Atom>) {
        use LtlFormula::*;
        match f {
            True | False => {}
            Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Not(a) | Next(a) | Globally(a) | Eventually(a) => walk(a, out),
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) | Until(a, b) | Release(a, b) => {
                walk(a, out);
                walk(b, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(f, &mut out);
    out
}

/// A quantifier resolved against its structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedQuantifier {
    pub var: PathVar,
    pub system: String,
    /// Agents handed to the strategy, as indices into the structure's agent list.
    pub coalition: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentInfo {
    pub quantifiers: Vec<ResolvedQuantifier>,
    /// Body atoms in [`collect_atoms`] order.
    pub atoms: Vec<Atom>,
    /// For every atom, the position of its path variable in the block.
    pub atom_to_copy: Vec<usize>,
}

/// Resolves every quantifier against `systems` and checks that the body
/// only uses propositions its structures provide.
pub fn validate_fragment(
    f: &HyperFormula,
    systems: &BTreeMap<String, Mscgs>,
    default_system: Option<&str>,
) -> Result<FragmentInfo, FormulaError> {
    let start = Position::start();
    if f.block.len() > 1 && !f.bracketed {
        return Err(FormulaError::UnsupportedFragment {
            pos: start,
            message: "sequential quantifier prefixes are not supported; use [ ... ]".into(),
        });
    }
    let mut quantifiers = Vec::with_capacity(f.block.len());
    for q in &f.block {
        if quantifiers
            .iter()
            .any(|r: &ResolvedQuantifier| r.var == q.var)
        {
            return Err(FormulaError::DuplicateVariable {
                var: q.var.to_string(),
                pos: start,
            });
        }
        let system = match (&q.system, default_system) {
            (Some(s), _) => s.clone(),
            (None, Some(d)) => d.to_string(),
            (None, None) => {
                return Err(FormulaError::MissingDefaultSystem {
                    var: q.var.to_string(),
                })
            }
        };
        let g = systems
            .get(&system)
            .ok_or_else(|| FormulaError::UnknownSystem(system.clone()))?;
        let coalition = match &q.spec {
            AgentSpec::Forall => BTreeSet::new(),
            AgentSpec::Exists => (0..g.agents().len()).collect(),
            AgentSpec::Coalition(names) => names
                .iter()
                .map(|name| {
                    g.agent_index(name).ok_or_else(|| FormulaError::UnknownAgent {
                        agent: name.clone(),
                        system: system.clone(),
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        quantifiers.push(ResolvedQuantifier {
            var: q.var.clone(),
            system,
            coalition,
        });
    }

    let atoms = collect_atoms(&f.body);
    let mut atom_to_copy = Vec::with_capacity(atoms.len());
    for atom in &atoms {
        let copy = quantifiers
            .iter()
            .position(|r| r.var == atom.var)
            .ok_or_else(|| FormulaError::UnboundVariable {
                var: atom.var.to_string(),
                pos: start,
            })?;
        let system = &quantifiers[copy].system;
        if systems[system].prop_index(&atom.prop).is_none() {
            return Err(FormulaError::UnknownProposition {
                prop: atom.prop.clone(),
                var: atom.var.to_string(),
                system: system.clone(),
            });
        }
        atom_to_copy.push(copy);
    }
    Ok(FragmentInfo {
        quantifiers,
        atoms,
        atom_to_copy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use LtlFormula as L;

    fn a() -> L {
        L::atom("a", "p")
    }

    fn b() -> L {
        L::atom("b", "p")
    }

    #[test]
    fn nnf_dualizes_until() {
        let f = L::not(L::until(a(), b()));
        assert_eq!(to_nnf(&f), L::release(L::not(a()), L::not(b())));
    }

    #[test]
    fn nnf_next_is_self_dual() {
        let f = L::not(L::next(a()));
        assert_eq!(to_nnf(&f), L::next(L::not(a())));
    }

    #[test]
    fn nnf_is_identity_on_nnf_input() {
        let f = L::and(a(), b());
        assert_eq!(to_nnf(&f), f);
    }

    #[test]
    fn nnf_eliminates_sugar() {
        let f = L::not(L::globally(L::implies(a(), L::iff(a(), b()))));
        let n = to_nnf(&f);
        assert!(n.is_nnf(), "{n}");
        assert_eq!(to_nnf(&n), n);
    }

    #[test]
    fn atoms_in_first_occurrence_order() {
        let f = parse_ltl("G (o[0]{p1} <-> o[0]{p2})").unwrap();
        assert_eq!(
            collect_atoms(&f),
            vec![Atom::new("o[0]", "p1"), Atom::new("o[0]", "p2")]
        );
        assert!(collect_atoms(&L::True).is_empty());
        let fair = parse_ltl("G F !stut{p1}").unwrap();
        assert_eq!(collect_atoms(&fair), vec![Atom::new("stut", "p1")]);
    }
}
