//! Random small inputs shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hyperatl_core::formula::Atom;
use hyperatl_core::ltl2dpa::Dpa;
use hyperatl_core::structures::{Controller, Mscgs, State};
use rand::Rng;

/// Up to `max_states` states, two agents at random stages, props `a`, `b`.
pub fn random_structure(rng: &mut impl Rng, max_states: usize) -> Mscgs {
    let n = rng.gen_range(1..=max_states);
    let agents = vec!["x0".to_string(), "x1".to_string()];
    let stages: BTreeMap<usize, u32> = (0..2).map(|a| (a, rng.gen_range(0..=1))).collect();
    let mut states = Vec::with_capacity(n);
    for i in 0..n {
        let mut controllers = Vec::new();
        for agent in 0..2 {
            if rng.gen_bool(0.6) {
                controllers.push(Controller {
                    agent,
                    arity: rng.gen_range(1..=2),
                });
            }
        }
        let width: u32 = controllers.iter().map(|c| c.arity).product();
        let successors = (0..width).map(|_| rng.gen_range(0..n as u32)).collect();
        let labels = (0..2).filter(|_| rng.gen_bool(0.5)).collect();
        states.push(State {
            name: format!("s{i}"),
            controllers,
            successors,
            labels,
        });
    }
    Mscgs {
        agents,
        stages,
        props: vec!["a".into(), "b".into()],
        states,
        initial: 0,
    }
}

/// A total DPA over `atoms` with up to `max_states` states and colors < 4.
pub fn random_dpa(rng: &mut impl Rng, atoms: Vec<Atom>, max_states: usize) -> Dpa {
    let n = rng.gen_range(1..=max_states);
    let letters = 1usize << atoms.len();
    Dpa {
        atoms,
        initial: 0,
        colors: (0..n).map(|_| rng.gen_range(0..4)).collect(),
        delta: (0..n * letters).map(|_| rng.gen_range(0..n as u32)).collect(),
    }
}

/// All move vectors over `agents` agents with moves below `bound`.
pub fn move_vectors(agents: usize, bound: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..agents {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..bound).map(move |m| {
                    let mut w = v.clone();
                    w.push(m);
                    w
                })
            })
            .collect();
    }
    out
}
