use std::fmt;

use super::{AutomatonError, Letter};
use crate::formula::{Atom, LtlFormula};

/// Positive boolean combination of states and atom literals. Literals are
/// resolved against a letter before the formula is used as a transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PosBool {
    True,
    False,
    /// Atom index and required polarity.
    Lit(usize, bool),
    State(usize),
    And(Box<PosBool>, Box<PosBool>),
    Or(Box<PosBool>, Box<PosBool>),
}

pub type StateSet = u128;

/// Most APA states supported; sets of states are kept in a `u128`.
pub const MAX_APA_STATES: usize = 128;

impl PosBool {
    fn and(a: PosBool, b: PosBool) -> PosBool {
        PosBool::And(Box::new(a), Box::new(b))
    }

    fn or(a: PosBool, b: PosBool) -> PosBool {
        PosBool::Or(Box::new(a), Box::new(b))
    }

    /// Minimal sets of states satisfying the formula under `letter`.
    pub fn models(&self, letter: Letter) -> Vec<StateSet> {
        match self {
            PosBool::True => vec![0],
            PosBool::False => Vec::new(),
            PosBool::Lit(a, pol) => {
                if (letter >> a & 1 == 1) == *pol {
                    vec![0]
                } else {
                    Vec::new()
                }
            }
            PosBool::State(q) => vec![1 << q],
            PosBool::Or(a, b) => {
                let mut out = a.models(letter);
                out.extend(b.models(letter));
                minimal(out)
            }
            PosBool::And(a, b) => {
                let (ma, mb) = (a.models(letter), b.models(letter));
                let mut out = Vec::with_capacity(ma.len() * mb.len());
                for x in &ma {
                    for y in &mb {
                        out.push(x | y);
                    }
                }
                minimal(out)
            }
        }
    }

    fn remap(&self, map: &[usize]) -> PosBool {
        match self {
            PosBool::State(q) => PosBool::State(map[*q]),
            PosBool::And(a, b) => PosBool::and(a.remap(map), b.remap(map)),
            PosBool::Or(a, b) => PosBool::or(a.remap(map), b.remap(map)),
            other => other.clone(),
        }
    }

    fn states(&self, out: &mut Vec<usize>) {
        match self {
            PosBool::State(q) => out.push(*q),
            PosBool::And(a, b) | PosBool::Or(a, b) => {
                a.states(out);
                b.states(out);
            }
            _ => {}
        }
    }
}

/// Sorted, duplicate-free list of the inclusion-minimal sets.
pub(crate) fn minimal(mut sets: Vec<StateSet>) -> Vec<StateSet> {
    sets.sort_by_key(|s| (s.count_ones(), *s));
    sets.dedup();
    let mut out: Vec<StateSet> = Vec::with_capacity(sets.len());
    for s in sets {
        if !out.iter().any(|m| m & s == *m) {
            out.push(s);
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApaState {
    /// The subformula this state is responsible for.
    pub formula: LtlFormula,
    pub transition: PosBool,
    pub color: u32,
}

/// Alternating parity automaton with one state per temporal obligation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Apa {
    pub atoms: Vec<Atom>,
    pub states: Vec<ApaState>,
    pub initial: usize,
}

impl Apa {
    pub fn models(&self, q: usize, letter: Letter) -> Vec<StateSet> {
        self.states[q].transition.models(letter)
    }
}

impl fmt::Display for Apa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.states.iter().enumerate() {
            let init = if i == self.initial { " (initial)" } else { "" };
            writeln!(f, "q{i}{init} color {}: {}", s.color, s.formula)?;
        }
        Ok(())
    }
}

struct Builder<'a> {
    atoms: &'a [Atom],
    states: Vec<ApaState>,
}

impl Builder<'_> {
    fn atom(&self, a: &Atom) -> usize {
        self.atoms.iter().position(|b| b == a).expect("atom collected")
    }

    fn add(&mut self, formula: &LtlFormula, transition: PosBool, color: u32) -> usize {
        self.states.push(ApaState {
            formula: formula.clone(),
            transition,
            color,
        });
        self.states.len() - 1
    }

    /// Creates the initial state for `f` and returns it with its transition
    /// formula, which parents inline for boolean connectives.
    fn build(&mut self, f: &LtlFormula) -> Result<(usize, PosBool), AutomatonError> {
        use LtlFormula as L;
        // The state reserves its slot first so that recursive constructions
        // can refer to it.
        let me = self.add(f, PosBool::False, 0);
        let (rho, color) = match f {
            L::True => (PosBool::True, 0),
            L::False => (PosBool::False, 0),
            L::Atom(a) => (PosBool::Lit(self.atom(a), true), 0),
            L::Not(inner) => match &**inner {
                L::Atom(a) => (PosBool::Lit(self.atom(a), false), 0),
                _ => return Err(AutomatonError::NotNnf),
            },
            L::And(a, b) => {
                let (_, ra) = self.build(a)?;
                let (_, rb) = self.build(b)?;
                (PosBool::and(ra, rb), 0)
            }
            L::Or(a, b) => {
                let (_, ra) = self.build(a)?;
                let (_, rb) = self.build(b)?;
                (PosBool::or(ra, rb), 0)
            }
            L::Next(a) => {
                let (qa, _) = self.build(a)?;
                (PosBool::State(qa), 0)
            }
            L::Until(a, b) => {
                let (_, ra) = self.build(a)?;
                let (_, rb) = self.build(b)?;
                (PosBool::or(rb, PosBool::and(ra, PosBool::State(me))), 1)
            }
            L::Release(a, b) => {
                let (_, ra) = self.build(a)?;
                let (_, rb) = self.build(b)?;
                (PosBool::and(rb, PosBool::or(ra, PosBool::State(me))), 0)
            }
            // G b = false R b and F b = true U b, simplified.
            L::Globally(b) => {
                let (_, rb) = self.build(b)?;
                (PosBool::and(rb, PosBool::State(me)), 0)
            }
            L::Eventually(b) => {
                let (_, rb) = self.build(b)?;
                (PosBool::or(rb, PosBool::State(me)), 1)
            }
            L::Implies(..) | L::Iff(..) => return Err(AutomatonError::NotNnf),
        };
        self.states[me].transition = rho.clone();
        self.states[me].color = color;
        Ok((me, rho))
    }
}

/// Builds the alternating automaton of an NNF formula over the given atoms.
/// States never entered by any transition are dropped afterwards.
pub fn ltl_to_apa(f: &LtlFormula, atoms: &[Atom]) -> Result<Apa, AutomatonError> {
    let mut b = Builder {
        atoms,
        states: Vec::new(),
    };
    let (init, _) = b.build(f)?;

    // Keep the initial state and everything reachable through State(_).
    let mut keep = vec![false; b.states.len()];
    let mut stack = vec![init];
    keep[init] = true;
    while let Some(q) = stack.pop() {
        let mut succ = Vec::new();
        b.states[q].transition.states(&mut succ);
        for s in succ {
            if !keep[s] {
                keep[s] = true;
                stack.push(s);
            }
        }
    }
    let mut map = vec![usize::MAX; keep.len()];
    let mut next = 0;
    for (i, k) in keep.iter().enumerate() {
        if *k {
            map[i] = next;
            next += 1;
        }
    }
    if next > MAX_APA_STATES {
        return Err(AutomatonError::TooManyApaStates { states: next });
    }
    let states = b
        .states
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(s, _)| ApaState {
            formula: s.formula.clone(),
            transition: s.transition.remap(&map),
            color: s.color,
        })
        .collect();
    Ok(Apa {
        atoms: atoms.to_vec(),
        states,
        initial: map[init],
    })
}
