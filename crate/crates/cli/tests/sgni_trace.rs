//! Trace-level check of generalized noninterference, independent of the
//! game: for all paths p1, p2 there must be a path p3 that agrees with p1
//! on `h` and with p2 on `o` at every step. The strategic version with any
//! delay implies this, so a counterexample here refutes it as well.

use std::collections::{BTreeSet, HashSet, VecDeque};

use hyperatl::builtin_program;
use hyperatl_core::imp::{build_cgs, parse_program, DEFAULT_STATE_LIMIT};
use hyperatl_core::structures::{Mscgs, StateId};

/// Searches pairs of finite paths of length up to `depth`, tracking the
/// set of p3 states consistent with both so far. Returns the length of the
/// shortest pair that no p3 can follow.
fn shortest_counterexample(g: &Mscgs, depth: usize) -> Option<usize> {
    let h = g.prop_index("h[0]").unwrap();
    let o = g.prop_index("o[0]").unwrap();
    let fits = |t: StateId, a: StateId, b: StateId| {
        g.has_label(t, h) == g.has_label(a, h) && g.has_label(t, o) == g.has_label(b, o)
    };
    let s0 = g.initial;
    let start: BTreeSet<StateId> = [s0].into_iter().filter(|&t| fits(t, s0, s0)).collect();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([((s0, s0, start), 1)]);
    while let Some(((a, b, witnesses), len)) = queue.pop_front() {
        if witnesses.is_empty() {
            return Some(len);
        }
        if len == depth || !seen.insert((a, b, witnesses.clone())) {
            continue;
        }
        for a2 in g.successor_set(a) {
            for b2 in g.successor_set(b) {
                let next: BTreeSet<StateId> = witnesses
                    .iter()
                    .flat_map(|&w| g.successor_set(w))
                    .filter(|&t| fits(t, a2, b2))
                    .collect();
                queue.push_back(((a2, b2, next), len + 1));
            }
        }
    }
    None
}

fn structure(name: &str) -> Mscgs {
    let parsed = parse_program(builtin_program(name).unwrap()).unwrap();
    build_cgs(&parsed, DEFAULT_STATE_LIMIT).unwrap().structure
}

#[test]
fn p1_to_p3_admit_witnesses() {
    for p in ["P1", "P2", "P3"] {
        assert_eq!(shortest_counterexample(&structure(p), 40), None, "{p}");
    }
}

#[test]
fn p4_has_no_witness_for_some_pair() {
    let len = shortest_counterexample(&structure("P4"), 40);
    assert!(len.is_some());
}
