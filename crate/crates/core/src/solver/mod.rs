//! Min-even parity games: Zielonka's recursive algorithm with positional
//! strategies, a brute-force reference solver and a strategy checker.

pub mod scc;

use std::fmt::Write as _;

use thiserror::Error;

use scc::{tarjan, Csr};

pub const NO_MOVE: u32 = u32::MAX;

/// A parity game in compressed adjacency form. Player 0 wins a play iff the
/// least priority seen infinitely often is even.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParityGame {
    pub owner: Vec<u8>,
    pub priority: Vec<u32>,
    pub offsets: Vec<u32>,
    pub targets: Vec<u32>,
    pub initial: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("vertex {0} has no successor")]
    DeadEnd(u32),
    #[error("edge from {from} to missing vertex {to}")]
    BadEdge { from: u32, to: u32 },
    #[error("vertex {0} has owner other than 0 or 1")]
    BadOwner(u32),
    #[error("strategy space of {0} combinations exceeds the brute-force bound")]
    TooLarge(f64),
}

impl ParityGame {
    /// Builds a game from per-vertex successor lists.
    pub fn from_lists(owner: Vec<u8>, priority: Vec<u32>, succ: &[Vec<u32>], initial: u32) -> Self {
        let mut offsets = Vec::with_capacity(succ.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for s in succ {
            targets.extend_from_slice(s);
            offsets.push(targets.len() as u32);
        }
        ParityGame {
            owner,
            priority,
            offsets,
            targets,
            initial,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.owner.len()
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, v: u32) -> &[u32] {
        &self.targets[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let n = self.num_vertices() as u32;
        for v in 0..n {
            if self.owner[v as usize] > 1 {
                return Err(GameError::BadOwner(v));
            }
            let succ = self.successors(v);
            if succ.is_empty() {
                return Err(GameError::DeadEnd(v));
            }
            if let Some(&to) = succ.iter().find(|&&t| t >= n) {
                return Err(GameError::BadEdge { from: v, to });
            }
        }
        Ok(())
    }

    fn predecessors(&self) -> Csr {
        let n = self.num_vertices();
        let mut offsets = vec![0u32; n + 1];
        for &t in &self.targets {
            offsets[t as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; self.targets.len()];
        for v in 0..n as u32 {
            for &t in self.successors(v) {
                targets[fill[t as usize] as usize] = v;
                fill[t as usize] += 1;
            }
        }
        Csr { offsets, targets }
    }

    /// Graphviz rendering: player 0 as circles, player 1 as boxes. With a
    /// solution, vertices show their winner and strategy edges are bold.
    pub fn to_dot(&self, labels: Option<&[String]>, solution: Option<&Solution>) -> String {
        let mut out = String::from("digraph game {\n");
        for v in 0..self.num_vertices() {
            let shape = if self.owner[v] == 0 { "circle" } else { "box" };
            let name = labels.map_or(String::new(), |l| format!("\\n{}", l[v]));
            let won = solution.map_or(String::new(), |s| format!(" W{}", s.winner[v]));
            let extra = if v as u32 == self.initial {
                ", peripheries=2"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  v{v} [shape={shape}, label=\"{v} p{}{won}{name}\"{extra}];",
                self.priority[v]
            );
        }
        for v in 0..self.num_vertices() as u32 {
            let chosen = solution.map_or(NO_MOVE, |s| s.strategy[v as usize]);
            for &t in self.successors(v) {
                if t == chosen {
                    let _ = writeln!(out, "  v{v} -> v{t} [style=bold];");
                } else {
                    let _ = writeln!(out, "  v{v} -> v{t};");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Winner per vertex and a positional strategy for the owner on its own
/// winning vertices ([`NO_MOVE`] elsewhere).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub winner: Vec<u8>,
    pub strategy: Vec<u32>,
}

impl Solution {
    pub fn region(&self, player: u8) -> Vec<u32> {
        (0..self.winner.len() as u32)
            .filter(|&v| self.winner[v as usize] == player)
            .collect()
    }
}

struct Zielonka<'a> {
    g: &'a ParityGame,
    pred: Csr,
    in_sub: Vec<bool>,
    in_attr: Vec<bool>,
    count: Vec<u32>,
    stamp: Vec<u32>,
    generation: u32,
    strategy: Vec<u32>,
}

impl Zielonka<'_> {
    /// Attractor of `player` to `target` inside the current subgame. Records
    /// attracting moves for the player's vertices.
    fn attractor(&mut self, player: u8, target: &[u32]) -> Vec<u32> {
        self.generation += 1;
        let mut attr: Vec<u32> = target.to_vec();
        for &v in target {
            self.in_attr[v as usize] = true;
        }
        let mut head = 0;
        while head < attr.len() {
            let x = attr[head];
            head += 1;
            let (lo, hi) = (
                self.pred.offsets[x as usize] as usize,
                self.pred.offsets[x as usize + 1] as usize,
            );
            for k in lo..hi {
                let v = self.pred.targets[k];
                let vi = v as usize;
                if !self.in_sub[vi] || self.in_attr[vi] {
                    continue;
                }
                if self.g.owner[vi] == player {
                    self.strategy[vi] = x;
                } else {
                    if self.stamp[vi] != self.generation {
                        self.stamp[vi] = self.generation;
                        self.count[vi] = self
                            .g
                            .successors(v)
                            .iter()
                            .filter(|&&t| self.in_sub[t as usize])
                            .count() as u32;
                    }
                    self.count[vi] -= 1;
                    if self.count[vi] > 0 {
                        continue;
                    }
                }
                self.in_attr[vi] = true;
                attr.push(v);
            }
        }
        for &v in &attr {
            self.in_attr[v as usize] = false;
        }
        attr
    }

    /// Solves the subgame marked in `in_sub`, which must equal `u`; the
    /// marking is restored on return.
    fn solve(&mut self, mut u: Vec<u32>) -> [Vec<u32>; 2] {
        let original = u.clone();
        let mut won: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
        while !u.is_empty() {
            let p = u.iter().map(|&v| self.g.priority[v as usize]).min().unwrap();
            let i = (p % 2) as u8;
            let top: Vec<u32> = u
                .iter()
                .copied()
                .filter(|&v| self.g.priority[v as usize] == p)
                .collect();
            let a = self.attractor(i, &top);
            for &v in &a {
                self.in_sub[v as usize] = false;
            }
            let rest: Vec<u32> = u.iter().copied().filter(|&v| self.in_sub[v as usize]).collect();
            let sub = self.solve(rest);
            for &v in &a {
                self.in_sub[v as usize] = true;
            }
            let opp = 1 - i;
            if sub[opp as usize].is_empty() {
                // Player i wins everything; top vertices may move anywhere inside.
                for &v in &top {
                    if self.g.owner[v as usize] == i {
                        let succ = self.g.successors(v);
                        self.strategy[v as usize] = *succ
                            .iter()
                            .find(|&&t| self.in_sub[t as usize])
                            .expect("subgames are traps");
                    }
                }
                won[i as usize].extend_from_slice(&u);
                break;
            }
            let b = self.attractor(opp, &sub[opp as usize]);
            for &v in &b {
                self.in_sub[v as usize] = false;
            }
            won[opp as usize].extend_from_slice(&b);
            u.retain(|&v| self.in_sub[v as usize]);
        }
        for &v in &original {
            self.in_sub[v as usize] = true;
        }
        won
    }
}

/// Zielonka's algorithm. Ties are broken by vertex order, so the result is
/// deterministic.
pub fn zielonka(g: &ParityGame) -> Solution {
    let n = g.num_vertices();
    let mut z = Zielonka {
        g,
        pred: g.predecessors(),
        in_sub: vec![true; n],
        in_attr: vec![false; n],
        count: vec![0; n],
        stamp: vec![0; n],
        generation: 0,
        strategy: vec![NO_MOVE; n],
    };
    let won = z.solve((0..n as u32).collect());
    let mut winner = vec![0u8; n];
    for &v in &won[1] {
        winner[v as usize] = 1;
    }
    let mut strategy = z.strategy;
    for v in 0..n {
        if g.owner[v] != winner[v] {
            strategy[v] = NO_MOVE;
        }
    }
    Solution { winner, strategy }
}

pub const BRUTE_FORCE_BOUND: f64 = (1u64 << 20) as f64;

/// Reference solver: tries every positional strategy pair. Vertex `v` is won
/// by player 0 iff some player-0 strategy wins from `v` against every
/// player-1 strategy.
pub fn brute_force_solve(g: &ParityGame, bound: f64) -> Result<Vec<u8>, GameError> {
    g.validate()?;
    let n = g.num_vertices();
    let combos: f64 = (0..n as u32).map(|v| g.successors(v).len() as f64).product();
    if combos > bound {
        return Err(GameError::TooLarge(combos));
    }
    let owned = |p: u8| -> Vec<u32> { (0..n as u32).filter(|&v| g.owner[v as usize] == p).collect() };
    let (mine, theirs) = (owned(0), owned(1));
    let mut win0 = vec![false; n];
    let mut choice = vec![0usize; n];
    for_each_assignment(g, &mine, &mut choice, &mut |choice| {
        // v is good for this strategy if no player-1 answer makes it lose.
        let mut good = vec![true; n];
        let mut inner = choice.to_vec();
        for_each_assignment(g, &theirs, &mut inner, &mut |full| {
            for (v, ok) in good.iter_mut().enumerate() {
                if *ok && !play_is_even(g, full, v as u32) {
                    *ok = false;
                }
            }
        });
        for v in 0..n {
            win0[v] |= good[v];
        }
    });
    Ok(win0.into_iter().map(|w| u8::from(!w)).collect())
}

fn for_each_assignment(
    g: &ParityGame,
    vertices: &[u32],
    choice: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    fn rec(
        g: &ParityGame,
        vertices: &[u32],
        k: usize,
        choice: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if k == vertices.len() {
            f(choice);
            return;
        }
        let v = vertices[k] as usize;
        for c in 0..g.successors(v as u32).len() {
            choice[v] = c;
            rec(g, vertices, k + 1, choice, f);
        }
    }
    rec(g, vertices, 0, choice, f);
}

/// Follows the unique play from `v` under a full choice vector.
fn play_is_even(g: &ParityGame, choice: &[usize], v: u32) -> bool {
    let mut seen = vec![usize::MAX; g.num_vertices()];
    let mut path = Vec::new();
    let mut x = v;
    while seen[x as usize] == usize::MAX {
        seen[x as usize] = path.len();
        path.push(x);
        x = g.successors(x)[choice[x as usize]];
    }
    let min = path[seen[x as usize]..]
        .iter()
        .map(|&w| g.priority[w as usize])
        .min()
        .unwrap();
    min % 2 == 0
}

/// Checks that each player's strategy wins on its claimed region: the
/// region is closed under the opponent's moves and the strategy, and the
/// graph that remains has no cycle whose least priority favors the opponent.
pub fn verify_strategy(g: &ParityGame, sol: &Solution) -> bool {
    let n = g.num_vertices();
    if sol.winner.len() != n || sol.strategy.len() != n {
        return false;
    }
    for player in 0..2u8 {
        let inside = |v: u32| sol.winner[v as usize] == player;
        let mut edges = Vec::new();
        for v in 0..n as u32 {
            if !inside(v) {
                continue;
            }
            if g.owner[v as usize] == player {
                let s = sol.strategy[v as usize];
                if s == NO_MOVE || !g.successors(v).contains(&s) || !inside(s) {
                    return false;
                }
                edges.push((v, s));
            } else {
                for &t in g.successors(v) {
                    if !inside(t) {
                        return false;
                    }
                    edges.push((v, t));
                }
            }
        }
        // For each losing priority p: no cycle among vertices of priority
        // >= p that passes through a vertex of priority p.
        let mut losing: Vec<u32> = g
            .priority
            .iter()
            .copied()
            .filter(|p| p % 2 != player as u32)
            .collect();
        losing.sort_unstable();
        losing.dedup();
        for p in losing {
            let keep = |v: u32| g.priority[v as usize] >= p;
            let sub = Csr::from_edges(
                n,
                edges.iter().copied().filter(|&(a, b)| keep(a) && keep(b)),
            );
            for comp in tarjan(&sub) {
                let cyclic = comp.len() > 1 || sub_has_loop(&sub, comp[0]);
                if cyclic && comp.iter().any(|&v| g.priority[v as usize] == p) {
                    return false;
                }
            }
        }
    }
    true
}

fn sub_has_loop(g: &Csr, v: u32) -> bool {
    use scc::Graph;
    g.successors(v).contains(&v)
}
