use rustc_hash::FxHashMap;

use super::Dpa;
use crate::solver::scc::tarjan;

/// Drops states unreachable from the initial state; the survivors keep
/// their relative order.
pub fn prune(dpa: &Dpa) -> Dpa {
    let n = dpa.num_states();
    let letters = dpa.num_letters();
    let mut reached = vec![false; n];
    let mut stack = vec![dpa.initial];
    reached[dpa.initial as usize] = true;
    while let Some(q) = stack.pop() {
        for l in 0..letters {
            let t = dpa.delta[q as usize * letters + l];
            if !reached[t as usize] {
                reached[t as usize] = true;
                stack.push(t);
            }
        }
    }
    let mut map = vec![u32::MAX; n];
    let mut next = 0;
    for q in 0..n {
        if reached[q] {
            map[q] = next;
            next += 1;
        }
    }
    let mut colors = Vec::with_capacity(next as usize);
    let mut delta = Vec::with_capacity(next as usize * letters);
    for q in 0..n {
        if reached[q] {
            colors.push(dpa.colors[q]);
            delta.extend(
                dpa.delta[q * letters..(q + 1) * letters]
                    .iter()
                    .map(|&t| map[t as usize]),
            );
        }
    }
    Dpa {
        atoms: dpa.atoms.clone(),
        initial: map[dpa.initial as usize],
        colors,
        delta,
    }
}

/// Recolors with as few priorities as possible while keeping the parity of
/// the minimal color on every cycle. A state on no cycle copies the color
/// of its successors when they agree (else the smallest color in use), so
/// that state minimization can merge it.
pub fn minimize_colors(dpa: &Dpa) -> Dpa {
    let n = dpa.num_states();
    let letters = dpa.num_letters();
    let succ: Vec<Vec<u32>> = (0..n)
        .map(|q| {
            let mut s = dpa.delta[q * letters..(q + 1) * letters].to_vec();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let mut colors = vec![u32::MAX; n];
    let all: Vec<u32> = (0..n as u32).collect();
    recolor(&all, &succ, &dpa.colors, 0, &mut colors);
    let fill = colors.iter().copied().filter(|&c| c != u32::MAX).min().unwrap_or(0);
    // Components come out successors first.
    for comp in tarjan(&succ) {
        for q in comp {
            let q = q as usize;
            if colors[q] != u32::MAX {
                continue;
            }
            let first = colors[succ[q][0] as usize];
            colors[q] = if succ[q].iter().all(|&t| colors[t as usize] == first) && first != u32::MAX {
                first
            } else {
                fill
            };
        }
    }
    Dpa {
        colors,
        ..dpa.clone()
    }
}

/// Assigns new colors inside the subgraph induced by `members`. Each
/// nontrivial SCC gets the smallest value of the right parity at or above
/// `floor` for its minimal color, then is handled again without those states.
fn recolor(members: &[u32], succ: &[Vec<u32>], old: &[u32], floor: u32, out: &mut [u32]) {
    let inside: FxHashMap<u32, usize> = members
        .iter()
        .enumerate()
        .map(|(i, &q)| (q, i))
        .collect();
    let local: Vec<Vec<u32>> = members
        .iter()
        .map(|q| {
            succ[*q as usize]
                .iter()
                .filter_map(|t| inside.get(t).map(|&i| i as u32))
                .collect()
        })
        .collect();
    for comp in tarjan(&local) {
        let nontrivial = comp.len() > 1 || local[comp[0] as usize].contains(&comp[0]);
        if !nontrivial {
            continue;
        }
        let states: Vec<u32> = comp.iter().map(|&i| members[i as usize]).collect();
        let m = states.iter().map(|&q| old[q as usize]).min().unwrap();
        let value = if floor % 2 == m % 2 { floor } else { floor + 1 };
        for &q in &states {
            out[q as usize] = value;
        }
        let rest: Vec<u32> = states
            .into_iter()
            .filter(|&q| old[q as usize] != m)
            .collect();
        if !rest.is_empty() {
            recolor(&rest, succ, old, value, out);
        }
    }
}

/// Moore partition refinement: merges states with equal colors whose
/// successors agree class-wise on every letter.
pub fn minimize_states(dpa: &Dpa) -> Dpa {
    let n = dpa.num_states();
    let letters = dpa.num_letters();
    let mut class: Vec<u32> = {
        let mut ids: FxHashMap<u32, u32> = FxHashMap::default();
        dpa.colors
            .iter()
            .map(|c| {
                let next = ids.len() as u32;
                *ids.entry(*c).or_insert(next)
            })
            .collect()
    };
    let mut count = class.iter().copied().max().map_or(0, |m| m + 1);
    loop {
        let mut ids: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
        let mut next_class = Vec::with_capacity(n);
        for q in 0..n {
            let mut sig = Vec::with_capacity(letters + 1);
            sig.push(class[q]);
            sig.extend(
                dpa.delta[q * letters..(q + 1) * letters]
                    .iter()
                    .map(|&t| class[t as usize]),
            );
            let next = ids.len() as u32;
            next_class.push(*ids.entry(sig).or_insert(next));
        }
        let new_count = ids.len() as u32;
        class = next_class;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    // Number classes by first occurrence so that the initial state's class
    // comes first when it is state 0.
    let mut order: FxHashMap<u32, u32> = FxHashMap::default();
    let mut rep = Vec::new();
    for q in 0..n {
        if !order.contains_key(&class[q]) {
            order.insert(class[q], rep.len() as u32);
            rep.push(q);
        }
    }
    let colors = rep.iter().map(|&q| dpa.colors[q]).collect();
    let mut delta = Vec::with_capacity(rep.len() * letters);
    for &q in &rep {
        delta.extend(
            dpa.delta[q * letters..(q + 1) * letters]
                .iter()
                .map(|&t| order[&class[t as usize]]),
        );
    }
    Dpa {
        atoms: dpa.atoms.clone(),
        initial: order[&class[dpa.initial as usize]],
        colors,
        delta,
    }
}
