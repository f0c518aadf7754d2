use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::apa::{Apa, StateSet};
use super::{AutomatonError, Lasso, Letter};
use crate::formula::Atom;

/// Nondeterministic Büchi automaton (colors 0 = accepting, 1 = not).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nba {
    pub atoms: Vec<Atom>,
    pub initial: u32,
    pub accepting: Vec<bool>,
    /// Successors of `(state, letter)` at `state * num_letters + letter`.
    pub delta: Vec<Vec<u32>>,
}

impl Nba {
    pub fn num_letters(&self) -> usize {
        1 << self.atoms.len()
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn successors(&self, q: u32, letter: Letter) -> &[u32] {
        &self.delta[q as usize * self.num_letters() + letter as usize]
    }

    pub fn colors(&self) -> Vec<u32> {
        self.accepting.iter().map(|&a| u32::from(!a)).collect()
    }

    /// Whether some run on the lasso visits an accepting state infinitely
    /// often. Works on the product of states and lasso positions.
    pub fn accepts_lasso(&self, w: &Lasso) -> bool {
        let len = w.len();
        let n = self.num_states();
        let node = |q: u32, i: usize| q as usize * len + i;
        let succ = |q: u32, i: usize| {
            let j = w.next_position(i);
            self.successors(q, w.letter(i))
                .iter()
                .map(move |&t| (t, j))
        };
        let mut reached = vec![false; n * len];
        let mut stack = vec![(self.initial, 0)];
        reached[node(self.initial, 0)] = true;
        let mut candidates = Vec::new();
        while let Some((q, i)) = stack.pop() {
            if self.accepting[q as usize] && i >= w.prefix.len() {
                candidates.push((q, i));
            }
            for (t, j) in succ(q, i) {
                if !reached[node(t, j)] {
                    reached[node(t, j)] = true;
                    stack.push((t, j));
                }
            }
        }
        // An accepting product node on a cycle witnesses acceptance.
        candidates.into_iter().any(|(q0, i0)| {
            let mut seen = vec![false; n * len];
            let mut stack: Vec<(u32, usize)> = succ(q0, i0).collect();
            while let Some((q, i)) = stack.pop() {
                if (q, i) == (q0, i0) {
                    return true;
                }
                if !seen[node(q, i)] {
                    seen[node(q, i)] = true;
                    stack.extend(succ(q, i));
                }
            }
            false
        })
    }
}

/// Breakpoint construction: states are pairs `(S, O)` where `S` is the
/// current level of the run DAG and `O ⊆ S` the states still owing a visit
/// to a color-0 state since the last breakpoint. Pairs with `O = ∅` accept.
pub fn apa_to_nba(apa: &Apa, limit: usize) -> Result<Nba, AutomatonError> {
    if let Some(s) = apa.states.iter().find(|s| s.color > 1) {
        return Err(AutomatonError::UnsupportedColor { color: s.color });
    }
    let n = apa.states.len();
    let letters = 1usize << apa.atoms.len();
    let owing: StateSet = (0..n)
        .filter(|&q| apa.states[q].color == 1)
        .fold(0, |acc, q| acc | 1 << q);

    // Transition models per (APA state, letter).
    let models: Vec<Vec<StateSet>> = (0..n)
        .flat_map(|q| (0..letters).map(move |l| (q, l as Letter)))
        .map(|(q, l)| apa.models(q, l))
        .collect();

    let start = (1 as StateSet) << apa.initial;
    let mut ids: FxHashMap<(StateSet, StateSet), u32> = FxHashMap::default();
    let mut pairs = vec![(start, 0 as StateSet)];
    ids.insert(pairs[0], 0);
    let mut delta = Vec::new();
    let mut queue = VecDeque::from([0u32]);
    while let Some(id) = queue.pop_front() {
        let (s, o) = pairs[id as usize];
        for letter in 0..letters {
            // Choose one model per member of S; track which members were in O.
            let mut choices: Vec<(StateSet, StateSet)> = vec![(0, 0)];
            for q in 0..n {
                if s >> q & 1 == 0 {
                    continue;
                }
                let ms = &models[q * letters + letter];
                let in_o = o >> q & 1 == 1;
                let mut next = Vec::with_capacity(choices.len() * ms.len());
                for &(a, b) in &choices {
                    for &m in ms {
                        next.push((a | m, if in_o { b | m } else { b }));
                    }
                }
                next.sort_unstable();
                next.dedup();
                choices = next;
                if choices.is_empty() {
                    break;
                }
            }
            let mut succ = Vec::with_capacity(choices.len());
            for (s2, from_o) in choices {
                let o2 = if o == 0 { s2 & owing } else { from_o & owing };
                let key = (s2, o2);
                let t = match ids.get(&key) {
                    Some(&t) => t,
                    None => {
                        let t = pairs.len() as u32;
                        if pairs.len() >= limit {
                            return Err(AutomatonError::StateLimit { limit });
                        }
                        pairs.push(key);
                        ids.insert(key, t);
                        queue.push_back(t);
                        t
                    }
                };
                succ.push(t);
            }
            succ.sort_unstable();
            succ.dedup();
            delta.push(succ);
        }
    }
    Ok(quotient(Nba {
        atoms: apa.atoms.clone(),
        initial: 0,
        accepting: pairs.iter().map(|&(_, o)| o == 0).collect(),
        delta,
    }))
}

/// Merges bisimilar states: same acceptance and, on every letter, the same
/// set of successor classes.
fn quotient(nba: Nba) -> Nba {
    let n = nba.num_states();
    let letters = nba.num_letters();
    let mut class: Vec<u32> = nba.accepting.iter().map(|&a| u32::from(a)).collect();
    let mut count = 0;
    loop {
        let mut ids: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
        let mut next = Vec::with_capacity(n);
        for q in 0..n {
            let mut sig = vec![class[q]];
            for l in 0..letters {
                let mut succ: Vec<u32> = nba.delta[q * letters + l]
                    .iter()
                    .map(|&t| class[t as usize])
                    .collect();
                succ.sort_unstable();
                succ.dedup();
                sig.push(u32::MAX);
                sig.extend(succ);
            }
            let fresh = ids.len() as u32;
            next.push(*ids.entry(sig).or_insert(fresh));
        }
        class = next;
        if ids.len() == count {
            break;
        }
        count = ids.len();
    }
    // Renumber classes by first occurrence, keeping the initial state first.
    let mut order = vec![u32::MAX; count];
    let mut rep = Vec::new();
    for q in 0..n {
        let c = class[q] as usize;
        if order[c] == u32::MAX {
            order[c] = rep.len() as u32;
            rep.push(q);
        }
    }
    let mut delta = Vec::with_capacity(rep.len() * letters);
    for &q in &rep {
        for l in 0..letters {
            let mut succ: Vec<u32> = nba.delta[q * letters + l]
                .iter()
                .map(|&t| order[class[t as usize] as usize])
                .collect();
            succ.sort_unstable();
            succ.dedup();
            delta.push(succ);
        }
    }
    Nba {
        initial: order[class[nba.initial as usize] as usize],
        accepting: rep.iter().map(|&q| nba.accepting[q]).collect(),
        delta,
        atoms: nba.atoms,
    }
}
