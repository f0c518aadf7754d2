//! LTL bodies to deterministic parity automata over atom assignments:
//! NNF, alternating automaton, breakpoint NBA, Safra-Piterman DPA, then
//! pruning, priority compaction and Moore minimization.
//!
//! A letter is a bitmask over the formula's atoms: bit `i` is the truth
//! value of `atoms[i]`. All parity conditions are min-even.

mod apa;
mod det;
mod minimize;
mod nba;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{collect_atoms, to_nnf, Atom, LtlFormula};

pub use apa::{ltl_to_apa, Apa, ApaState, PosBool, MAX_APA_STATES};
pub use det::nba_to_dpa;
pub use minimize::{minimize_colors, minimize_states, prune};
pub use nba::{apa_to_nba, Nba};

pub type Letter = u32;

pub const MAX_ATOMS: usize = 16;
pub const DEFAULT_STATE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("formula has {atoms} atoms; at most {MAX_ATOMS} are supported")]
    TooManyAtoms { atoms: usize },
    #[error("alternating automaton needs {states} states; at most {MAX_APA_STATES} are supported")]
    TooManyApaStates { states: usize },
    #[error("formula is not in negation normal form")]
    NotNnf,
    #[error("color {color} is not supported by the breakpoint construction (only 0 and 1)")]
    UnsupportedColor { color: u32 },
    #[error("automaton state limit of {limit} exceeded")]
    StateLimit { limit: usize },
}

/// An ultimately periodic word `prefix · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lasso {
    pub prefix: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

impl Lasso {
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Self {
        assert!(!cycle.is_empty(), "lasso cycle must be nonempty");
        Lasso { prefix, cycle }
    }

    /// Number of distinct positions.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letter(&self, i: usize) -> Letter {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[i - self.prefix.len()]
        }
    }

    pub fn next_position(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }
}

/// Truth of `f` at position 0 of the lasso, computed per position and
/// subformula with fixpoint iteration for the temporal operators.
/// `atoms` fixes the meaning of the letter bits.
pub fn eval_lasso(f: &LtlFormula, atoms: &[Atom], w: &Lasso) -> bool {
    eval_positions(f, atoms, w)[0]
}

fn eval_positions(f: &LtlFormula, atoms: &[Atom], w: &Lasso) -> Vec<bool> {
    use LtlFormula as L;
    let n = w.len();
    let next = |i: usize| w.next_position(i);
    // Least (`init = false`) or greatest (`init = true`) solution of
    // v[i] = step(i, v[next(i)]).
    let fixpoint = |init: bool, step: &dyn Fn(usize, bool) -> bool| {
        let mut v = vec![init; n];
        loop {
            let mut changed = false;
            for i in (0..n).rev() {
                let x = step(i, v[next(i)]);
                if x != v[i] {
                    v[i] = x;
                    changed = true;
                }
            }
            if !changed {
                return v;
            }
        }
    };
    match f {
        L::True => vec![true; n],
        L::False => vec![false; n],
        L::Atom(a) => {
            let bit = atoms.iter().position(|b| b == a).expect("atom not in alphabet");
            (0..n).map(|i| w.letter(i) >> bit & 1 == 1).collect()
        }
        L::Not(a) => eval_positions(a, atoms, w).into_iter().map(|x| !x).collect(),
        L::And(a, b) | L::Or(a, b) | L::Implies(a, b) | L::Iff(a, b) => {
            let (va, vb) = (eval_positions(a, atoms, w), eval_positions(b, atoms, w));
            va.iter()
                .zip(&vb)
                .map(|(&x, &y)| match f {
                    L::And(..) => x && y,
                    L::Or(..) => x || y,
                    L::Implies(..) => !x || y,
                    _ => x == y,
                })
                .collect()
        }
        L::Next(a) => {
            let va = eval_positions(a, atoms, w);
            (0..n).map(|i| va[next(i)]).collect()
        }
        L::Until(a, b) => {
            let (va, vb) = (eval_positions(a, atoms, w), eval_positions(b, atoms, w));
            fixpoint(false, &|i, later| vb[i] || (va[i] && later))
        }
        L::Release(a, b) => {
            let (va, vb) = (eval_positions(a, atoms, w), eval_positions(b, atoms, w));
            fixpoint(true, &|i, later| vb[i] && (va[i] || later))
        }
        L::Eventually(a) => {
            let va = eval_positions(a, atoms, w);
            fixpoint(false, &|i, later| va[i] || later)
        }
        L::Globally(a) => {
            let va = eval_positions(a, atoms, w);
            fixpoint(true, &|i, later| va[i] && later)
        }
    }
}

/// Deterministic parity automaton with state-based min-even colors and a
/// total transition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dpa {
    pub atoms: Vec<Atom>,
    pub initial: u32,
    pub colors: Vec<u32>,
    /// Successor of `(state, letter)` at `state * num_letters + letter`.
    pub delta: Vec<u32>,
}

impl Dpa {
    pub fn num_states(&self) -> usize {
        self.colors.len()
    }

    pub fn num_letters(&self) -> usize {
        1 << self.atoms.len()
    }

    pub fn step(&self, q: u32, letter: Letter) -> u32 {
        self.delta[q as usize * self.num_letters() + letter as usize]
    }

    pub fn color(&self, q: u32) -> u32 {
        self.colors[q as usize]
    }

    pub fn num_colors(&self) -> usize {
        let mut c = self.colors.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    /// Runs the lasso and accepts iff the least color on the recurring part
    /// of the run is even.
    pub fn accepts_lasso(&self, w: &Lasso) -> bool {
        let mut q = self.initial;
        for &l in &w.prefix {
            q = self.step(q, l);
        }
        let k = w.cycle.len();
        let mut seen: BTreeMap<(u32, usize), usize> = BTreeMap::new();
        let mut trace = Vec::new();
        let mut pos = 0;
        loop {
            if let Some(&start) = seen.get(&(q, pos)) {
                return trace[start..].iter().min().copied().unwrap_or(0) % 2 == 0;
            }
            seen.insert((q, pos), trace.len());
            trace.push(self.color(q));
            q = self.step(q, w.cycle[pos]);
            pos = (pos + 1) % k;
        }
    }

    /// Graphviz rendering with colors on states and edges labeled by cubes
    /// over the atoms.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dpa {\n");
        for q in 0..self.num_states() {
            let extra = if q as u32 == self.initial {
                ", peripheries=2"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  q{q} [label=\"{q}\\ncolor {}\"{extra}];",
                self.colors[q]
            );
        }
        let letters = self.num_letters();
        for q in 0..self.num_states() {
            let mut by_target: BTreeMap<u32, Vec<Letter>> = BTreeMap::new();
            for l in 0..letters {
                by_target
                    .entry(self.delta[q * letters + l])
                    .or_default()
                    .push(l as Letter);
            }
            for (t, ls) in by_target {
                let label = cover(&ls, self.atoms.len())
                    .iter()
                    .map(|c| c.render(&self.atoms))
                    .collect::<Vec<_>>()
                    .join(" | ");
                let _ = writeln!(out, "  q{q} -> q{t} [label=\"{label}\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// A conjunction of literals: bits in `care` are fixed to the bits of `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Cube {
    care: u32,
    value: u32,
}

impl Cube {
    fn render(&self, atoms: &[Atom]) -> String {
        let lits: Vec<String> = (0..atoms.len())
            .filter(|i| self.care >> i & 1 == 1)
            .map(|i| {
                let neg = if self.value >> i & 1 == 1 { "" } else { "!" };
                format!("{neg}{}", atoms[i])
            })
            .collect();
        if lits.is_empty() {
            "true".into()
        } else {
            lits.join(" & ")
        }
    }

    fn covers(&self, l: Letter) -> bool {
        l & self.care == self.value
    }
}

/// Prime implicants of the letter set followed by a greedy cover.
fn cover(letters: &[Letter], bits: usize) -> Vec<Cube> {
    let full = if bits == 32 { u32::MAX } else { (1 << bits) - 1 };
    let mut level: Vec<Cube> = letters
        .iter()
        .map(|&l| Cube {
            care: full,
            value: l,
        })
        .collect();
    let mut primes = Vec::new();
    while !level.is_empty() {
        let mut merged = vec![false; level.len()];
        let mut next = Vec::new();
        for i in 0..level.len() {
            for j in i + 1..level.len() {
                let (a, b) = (level[i], level[j]);
                let diff = a.value ^ b.value;
                if a.care == b.care && diff.count_ones() == 1 {
                    merged[i] = true;
                    merged[j] = true;
                    next.push(Cube {
                        care: a.care & !diff,
                        value: a.value & !diff,
                    });
                }
            }
        }
        for (c, m) in level.iter().zip(&merged) {
            if !m {
                primes.push(*c);
            }
        }
        next.sort_unstable();
        next.dedup();
        level = next;
    }
    primes.sort_unstable_by_key(|c| (c.care.count_ones(), *c));
    let mut chosen: Vec<Cube> = Vec::new();
    let mut left: Vec<Letter> = letters.to_vec();
    while !left.is_empty() {
        let best = primes
            .iter()
            .max_by_key(|c| (left.iter().filter(|&&l| c.covers(l)).count(), std::cmp::Reverse(c.care.count_ones())))
            .copied()
            .expect("letters are covered by their own minterms");
        left.retain(|&l| !best.covers(l));
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen
}

/// Sizes of the intermediate automata of one translation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranslationStats {
    pub apa_states: usize,
    pub nba_states: usize,
    pub raw_dpa_states: usize,
}

/// Full translation: NNF, APA, NBA, DPA, then pruning, color compaction and
/// state minimization. Letters follow [`collect_atoms`] on `f`.
pub fn ltl_to_dpa(f: &LtlFormula, limit: usize) -> Result<Dpa, AutomatonError> {
    ltl_to_dpa_with_stats(f, limit).map(|(d, _)| d)
}

pub fn ltl_to_dpa_with_stats(
    f: &LtlFormula,
    limit: usize,
) -> Result<(Dpa, TranslationStats), AutomatonError> {
    let atoms = collect_atoms(f);
    if atoms.len() > MAX_ATOMS {
        return Err(AutomatonError::TooManyAtoms { atoms: atoms.len() });
    }
    let apa = ltl_to_apa(&to_nnf(f), &atoms)?;
    let nba = apa_to_nba(&apa, limit)?;
    let raw = nba_to_dpa(&nba, limit)?;
    let stats = TranslationStats {
        apa_states: apa.states.len(),
        nba_states: nba.num_states(),
        raw_dpa_states: raw.num_states(),
    };
    let dpa = minimize_states(&minimize_colors(&prune(&raw)));
    Ok((minimize_colors(&dpa), stats))
}
