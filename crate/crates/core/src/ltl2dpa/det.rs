//! Safra-Piterman determinization with compact, age-ordered node names.

use rustc_hash::FxHashMap;

use super::nba::Nba;
use super::{AutomatonError, Dpa};

const ROOT: u32 = u32::MAX;

/// Sorted, duplicate-free set of NBA states. Labels are usually small, so
/// this beats a bitset over all NBA states.
type Set = Vec<u32>;

fn intersect(a: &[u32], b: &[u32]) -> Set {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn difference(a: &[u32], b: &[u32]) -> Set {
    let mut j = 0;
    a.iter()
        .copied()
        .filter(|&x| {
            while j < b.len() && b[j] < x {
                j += 1;
            }
            j == b.len() || b[j] != x
        })
        .collect()
}

/// Nodes in name order (index = name - 1). A parent always precedes its
/// children and older siblings precede younger ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Tree {
    parent: Vec<u32>,
    labels: Vec<Set>,
}

struct Determinizer<'a> {
    nba: &'a Nba,
    accepting: Vec<bool>,
    neutral: u32,
}

impl Determinizer<'_> {
    fn post(&self, label: &[u32], letter: usize) -> Set {
        let mut out: Set = label
            .iter()
            .flat_map(|&q| self.nba.successors(q, letter as u32))
            .copied()
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// One transition of the tree automaton; returns the new tree and the
    /// priority of the step.
    fn step(&self, tree: &Tree, letter: usize) -> (Tree, u32) {
        let old = tree.parent.len();
        let mut parent = tree.parent.clone();
        let mut labels: Vec<Set> = tree.labels.iter().map(|l| self.post(l, letter)).collect();

        // Spawn a youngest child holding the accepting states of each node.
        for i in 0..old {
            let child: Set = labels[i]
                .iter()
                .copied()
                .filter(|&q| self.accepting[q as usize])
                .collect();
            if !child.is_empty() {
                parent.push(i as u32);
                labels.push(child);
            }
        }

        // Horizontal merge: a state stays only with the oldest branch.
        let len = parent.len();
        for i in 0..len {
            let p = parent[i];
            if p == ROOT {
                continue;
            }
            let mut label = intersect(&labels[i], &labels[p as usize]);
            for j in 0..i {
                if parent[j] == p {
                    label = difference(&label, &labels[j]);
                }
            }
            labels[i] = label;
        }

        let mut alive: Vec<bool> = labels.iter().map(|l| !l.is_empty()).collect();
        let mut removed = (0..old).find(|&i| !alive[i]);

        // Vertical merge: a node covered by its children absorbs them.
        let mut green = None;
        for i in 0..len {
            if !alive[i] {
                continue;
            }
            let mut union: Set = Vec::new();
            let mut has_child = false;
            for j in i + 1..len {
                if alive[j] && parent[j] == i as u32 {
                    union.extend_from_slice(&labels[j]);
                    has_child = true;
                }
            }
            union.sort_unstable();
            if has_child && union == labels[i] {
                green.get_or_insert(i);
                for j in i + 1..len {
                    if alive[j] && self.descends(&parent, j, i) {
                        alive[j] = false;
                        if j < old {
                            removed = Some(removed.map_or(j, |r| r.min(j)));
                        }
                    }
                }
            }
        }

        let priority = match (green, removed) {
            (Some(e), Some(f)) if e < f => 2 * (e as u32 + 1),
            (Some(e), None) => 2 * (e as u32 + 1),
            (_, Some(f)) => 2 * (f as u32 + 1) - 1,
            (None, None) => self.neutral,
        };

        // Compact the names, keeping their order.
        let mut rename = vec![ROOT; len];
        let mut out = Tree {
            parent: Vec::new(),
            labels: Vec::new(),
        };
        for i in 0..len {
            if alive[i] {
                rename[i] = out.parent.len() as u32;
                let p = parent[i];
                out.parent.push(if p == ROOT { ROOT } else { rename[p as usize] });
                out.labels.push(std::mem::take(&mut labels[i]));
            }
        }
        (out, priority)
    }

    fn descends(&self, parent: &[u32], mut j: usize, ancestor: usize) -> bool {
        while parent[j] != ROOT {
            j = parent[j] as usize;
            if j == ancestor {
                return true;
            }
        }
        false
    }
}

/// Determinizes with state-based priorities: a DPA state is a tree paired
/// with the priority of the step that produced it.
pub fn nba_to_dpa(nba: &Nba, limit: usize) -> Result<Dpa, AutomatonError> {
    let n = nba.num_states();
    let letters = nba.num_letters();
    let det = Determinizer {
        nba,
        accepting: nba.accepting.clone(),
        neutral: 2 * n as u32 + 1,
    };
    let init_tree = Tree {
        parent: vec![ROOT],
        labels: vec![vec![nba.initial]],
    };

    // Trees are expanded once; DPA states pair a tree id with a priority.
    let mut tree_ids: FxHashMap<Tree, u32> = FxHashMap::default();
    let mut trees = vec![init_tree.clone()];
    tree_ids.insert(init_tree, 0);
    let mut tree_succ: Vec<Option<Vec<(u32, u32)>>> = vec![None];

    let mut state_ids: FxHashMap<(u32, u32), u32> = FxHashMap::default();
    let mut states = vec![(0u32, det.neutral)];
    state_ids.insert(states[0], 0);
    let mut delta = Vec::new();
    let mut next = 0;
    while next < states.len() {
        let (tree, _) = states[next];
        next += 1;
        if tree_succ[tree as usize].is_none() {
            let mut row = Vec::with_capacity(letters);
            for l in 0..letters {
                let (t, prio) = det.step(&trees[tree as usize], l);
                let id = match tree_ids.get(&t) {
                    Some(&id) => id,
                    None => {
                        let id = trees.len() as u32;
                        trees.push(t.clone());
                        tree_ids.insert(t, id);
                        tree_succ.push(None);
                        id
                    }
                };
                row.push((id, prio));
            }
            tree_succ[tree as usize] = Some(row);
        }
        let row = tree_succ[tree as usize].as_ref().unwrap();
        for &key in row {
            let id = match state_ids.get(&key) {
                Some(&id) => id,
                None => {
                    if states.len() >= limit {
                        return Err(AutomatonError::StateLimit { limit });
                    }
                    let id = states.len() as u32;
                    states.push(key);
                    state_ids.insert(key, id);
                    id
                }
            };
            delta.push(id);
        }
    }
    Ok(Dpa {
        atoms: nba.atoms.clone(),
        initial: 0,
        colors: states.iter().map(|&(_, c)| c).collect(),
        delta,
    })
}
