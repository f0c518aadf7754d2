//! Parity game for a quantifier block `[<<A1>>p1 ... <<Ak>>pk] body` over
//! k structures and the body's DPA.
//!
//! Vertices come in two kinds. An automaton step `(q, js)` reads the labels
//! of the joint state `js` and moves to the move selection rooted at
//! `(q', js)`. Move selection then fixes the moves of all copies stage by
//! stage: at stage `l` the coalition agents choose first (player 0), then the
//! remaining agents (player 1). Once every move is fixed, each copy takes its
//! transition and play returns to an automaton step.
//!
//! Only automaton steps and selection roots are hashed; the vertices inside a
//! selection round form a tree under their root.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::formula::Atom;
use crate::ltl2dpa::{Dpa, Letter};
use crate::solver::ParityGame;
use crate::structures::{Mscgs, StateId};

pub const DEFAULT_VERTEX_LIMIT: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArenaError {
    #[error("proposition `{prop}` of atom {atom} is not a proposition of copy {copy}")]
    UnknownProposition { atom: String, prop: String, copy: usize },
    #[error("atom {atom} refers to copy {copy}, but there are only {copies} copies")]
    BadCopy {
        atom: String,
        copy: usize,
        copies: usize,
    },
    #[error("parity game vertex limit of {limit} exceeded")]
    VertexLimit { limit: usize },
    #[error("parity game edge count exceeds the supported maximum")]
    EdgeOverflow,
}

/// One quantifier: its structure and the agents in its coalition.
#[derive(Clone, Copy, Debug)]
pub struct Quant<'a> {
    pub structure: &'a Mscgs,
    pub coalition: &'a BTreeSet<usize>,
}

/// Which move-selection vertices are left out of the game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Collapse {
    /// Keep every selection vertex.
    Off,
    /// Skip stages where no agent acts.
    EmptyStages,
    /// Skip every vertex with a single choice, including the final one
    /// that only records the complete move vector.
    #[default]
    SingleChoice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArenaOptions {
    pub collapse: Collapse,
    pub vertex_limit: usize,
    /// Record a description per vertex (for DOT output).
    pub labels: bool,
}

impl Default for ArenaOptions {
    fn default() -> Self {
        ArenaOptions {
            collapse: Collapse::default(),
            vertex_limit: DEFAULT_VERTEX_LIMIT,
            labels: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arena {
    pub game: ParityGame,
    pub labels: Option<Vec<String>>,
    pub joint_states: usize,
    pub automaton_steps: usize,
}

/// Assignment of the atoms read off a joint state: bit `i` is set iff the
/// proposition of `atoms[i]` labels the state of its copy.
pub fn letter(
    js: &[StateId],
    atoms: &[Atom],
    atom_to_copy: &[usize],
    structures: &[&Mscgs],
) -> Result<Letter, ArenaError> {
    let reader = LetterReader::new(atoms, atom_to_copy, structures)?;
    Ok(reader.read(js, structures))
}

struct LetterReader {
    /// (copy, proposition index) per atom.
    atoms: Vec<(usize, usize)>,
}

impl LetterReader {
    fn new(atoms: &[Atom], atom_to_copy: &[usize], structures: &[&Mscgs]) -> Result<Self, ArenaError> {
        let mut out = Vec::with_capacity(atoms.len());
        for (atom, &copy) in atoms.iter().zip(atom_to_copy) {
            let g = structures.get(copy).ok_or_else(|| ArenaError::BadCopy {
                atom: atom.to_string(),
                copy,
                copies: structures.len(),
            })?;
            let prop = g
                .prop_index(&atom.prop)
                .ok_or_else(|| ArenaError::UnknownProposition {
                    atom: atom.to_string(),
                    prop: atom.prop.clone(),
                    copy,
                })?;
            out.push((copy, prop));
        }
        Ok(LetterReader { atoms: out })
    }

    fn read(&self, js: &[StateId], structures: &[&Mscgs]) -> Letter {
        let mut l = 0;
        for (i, &(copy, prop)) in self.atoms.iter().enumerate() {
            if structures[copy].has_label(js[copy], prop) {
                l |= 1 << i;
            }
        }
        l
    }
}

/// Controllers acting at one `(stage, turn)` step: (copy, controller slot,
/// arity) in copy-major order.
type Acting = Vec<(usize, usize, u32)>;

struct Builder<'a> {
    quants: &'a [Quant<'a>],
    structures: Vec<&'a Mscgs>,
    dpa: &'a Dpa,
    reader: LetterReader,
    opts: ArenaOptions,
    max_stage: u32,
    js_store: Vec<StateId>,
    js_ids: FxHashMap<Vec<StateId>, u32>,
    js_letter: Vec<Letter>,
    steps: FxHashMap<(u32, u32), u32>,
    roots: FxHashMap<(u32, u32), u32>,
    pending: Vec<(u32, u32, u32)>,
    owner: Vec<u8>,
    priority: Vec<u32>,
    row_start: Vec<u32>,
    row_len: Vec<u32>,
    edges: Vec<u32>,
    labels: Vec<String>,
}

impl<'a> Builder<'a> {
    fn k(&self) -> usize {
        self.quants.len()
    }

    fn joint(&self, id: u32) -> &[StateId] {
        let k = self.k();
        &self.js_store[id as usize * k..(id as usize + 1) * k]
    }

    fn intern_js(&mut self, js: Vec<StateId>) -> u32 {
        if let Some(&id) = self.js_ids.get(&js) {
            return id;
        }
        let id = self.js_letter.len() as u32;
        self.js_letter.push(self.reader.read(&js, &self.structures));
        self.js_store.extend_from_slice(&js);
        self.js_ids.insert(js, id);
        id
    }

    fn vertex(&mut self, owner: u8, priority: u32, label: impl FnOnce() -> String) -> Result<u32, ArenaError> {
        if self.owner.len() >= self.opts.vertex_limit {
            return Err(ArenaError::VertexLimit {
                limit: self.opts.vertex_limit,
            });
        }
        let id = self.owner.len() as u32;
        self.owner.push(owner);
        self.priority.push(priority);
        self.row_start.push(0);
        self.row_len.push(0);
        if self.opts.labels {
            self.labels.push(label());
        }
        Ok(id)
    }

    fn set_row(&mut self, v: u32, succ: &[u32]) -> Result<(), ArenaError> {
        if self.edges.len() + succ.len() > u32::MAX as usize {
            return Err(ArenaError::EdgeOverflow);
        }
        self.row_start[v as usize] = self.edges.len() as u32;
        self.row_len[v as usize] = succ.len() as u32;
        self.edges.extend_from_slice(succ);
        Ok(())
    }

    fn describe_js(&self, js: u32) -> String {
        let parts: Vec<String> = self.joint(js).iter().map(|s| s.to_string()).collect();
        parts.join(",")
    }

    fn automaton_step(&mut self, q: u32, js: u32) -> Result<u32, ArenaError> {
        if let Some(&v) = self.steps.get(&(q, js)) {
            return Ok(v);
        }
        let desc = || format!("A q{q} ({})", self.describe_js(js));
        let label = if self.opts.labels { desc() } else { String::new() };
        let v = self.vertex(0, self.dpa.color(q), || label)?;
        self.steps.insert((q, js), v);
        self.pending.push((v, q, js));
        Ok(v)
    }

    /// Acting controllers of every `(stage, turn)` step at a joint state, in
    /// protocol order, minus the steps the collapse mode skips.
    fn plan(&self, js: u32) -> Vec<(u32, bool, Acting)> {
        let mut plan = Vec::new();
        for l in 0..=self.max_stage {
            for turn in [true, false] {
                let mut acting = Vec::new();
                for (copy, (quant, &s)) in self.quants.iter().zip(self.joint(js)).enumerate() {
                    let g = quant.structure;
                    for (slot, c) in g.state(s).controllers.iter().enumerate() {
                        if g.stage(c.agent) == l && quant.coalition.contains(&c.agent) == turn {
                            acting.push((copy, slot, c.arity));
                        }
                    }
                }
                let choices: u64 = acting.iter().map(|a| a.2 as u64).product();
                let skip = match self.opts.collapse {
                    Collapse::Off => false,
                    Collapse::EmptyStages => acting.is_empty(),
                    Collapse::SingleChoice => choices <= 1,
                };
                if !skip {
                    plan.push((l, turn, acting));
                }
            }
        }
        plan
    }

    /// Creates the selection round rooted at `(q, js)`, all of its vertices
    /// and their edges.
    fn selection(&mut self, q: u32, js: u32) -> Result<u32, ArenaError> {
        if let Some(&v) = self.roots.get(&(q, js)) {
            return Ok(v);
        }
        let plan = self.plan(js);
        let prio = self.dpa.color(q);
        let k = self.k();
        let slots: Vec<usize> = self
            .joint(js)
            .iter()
            .zip(self.quants)
            .map(|(&s, quant)| quant.structure.state(s).controllers.len())
            .collect();
        let mut offset = vec![0usize; k];
        for i in 1..k {
            offset[i] = offset[i - 1] + slots[i - 1];
        }
        let width = offset.last().map_or(0, |o| o + slots[k - 1]);

        let max_stage = self.max_stage;
        let js_desc = if self.opts.labels {
            self.describe_js(js)
        } else {
            String::new()
        };
        let stage_of = |t: usize| -> (u32, bool) {
            match plan.get(t) {
                Some(&(l, turn, _)) => (l, turn),
                None => (max_stage + 1, true),
            }
        };
        let owner_of = |t: usize| u8::from(!stage_of(t).1);
        let label = |t: usize, choice: &[u32]| {
            let (l, turn) = stage_of(t);
            let moves: Vec<String> = choice.iter().map(|c| c.to_string()).collect();
            format!(
                "M q{q} ({js_desc}) l={l} {} [{}]",
                if turn { "T" } else { "F" },
                moves.join(",")
            )
        };
        let root_label = if self.opts.labels {
            label(0, &vec![0; width])
        } else {
            String::new()
        };
        let root = self.vertex(owner_of(0), prio, || root_label)?;
        self.roots.insert((q, js), root);

        // Level-by-level expansion; each node carries its partial choices.
        let mut level: Vec<(u32, Vec<u32>)> = vec![(root, vec![0; width])];
        for t in 0..plan.len() {
            let acting = &plan[t].2;
            let total: u64 = acting.iter().map(|a| a.2 as u64).product();
            let last = t + 1 == plan.len();
            let mut next = Vec::new();
            for (v, partial) in &level {
                let mut succ = Vec::with_capacity(total as usize);
                for c in 0..total {
                    let mut choice = partial.clone();
                    let mut rest = c;
                    for &(copy, slot, arity) in acting.iter().rev() {
                        choice[offset[copy] + slot] = (rest % arity as u64) as u32;
                        rest /= arity as u64;
                    }
                    if last && self.opts.collapse == Collapse::SingleChoice {
                        let target = self.advance(q, js, &choice, &offset)?;
                        succ.push(target);
                    } else {
                        let lbl = if self.opts.labels {
                            label(t + 1, &choice)
                        } else {
                            String::new()
                        };
                        let child = self.vertex(owner_of(t + 1), prio, || lbl)?;
                        succ.push(child);
                        next.push((child, choice));
                    }
                }
                self.set_row(*v, &succ)?;
            }
            level = next;
        }
        // Remaining nodes have every move fixed.
        for (v, choice) in level {
            let target = self.advance(q, js, &choice, &offset)?;
            self.set_row(v, &[target])?;
        }
        Ok(root)
    }

    fn advance(&mut self, q: u32, js: u32, choice: &[u32], offset: &[usize]) -> Result<u32, ArenaError> {
        let next: Vec<StateId> = self
            .joint(js)
            .iter()
            .zip(self.quants)
            .enumerate()
            .map(|(copy, (&s, quant))| {
                let state = quant.structure.state(s);
                let n = state.controllers.len();
                state.successor_by_choice(&choice[offset[copy]..offset[copy] + n])
            })
            .collect();
        let id = self.intern_js(next);
        self.automaton_step(q, id)
    }
}

/// Builds the game. The initial vertex is the automaton step at the DPA's
/// initial state and the structures' initial states.
pub fn build_game(
    quants: &[Quant],
    dpa: &Dpa,
    atom_to_copy: &[usize],
    opts: ArenaOptions,
) -> Result<Arena, ArenaError> {
    let structures: Vec<&Mscgs> = quants.iter().map(|q| q.structure).collect();
    let reader = LetterReader::new(&dpa.atoms, atom_to_copy, &structures)?;
    let max_stage = structures.iter().map(|g| g.max_stage()).max().unwrap_or(0);
    let mut b = Builder {
        quants,
        structures,
        dpa,
        reader,
        opts,
        max_stage,
        js_store: Vec::new(),
        js_ids: FxHashMap::default(),
        js_letter: Vec::new(),
        steps: FxHashMap::default(),
        roots: FxHashMap::default(),
        pending: Vec::new(),
        owner: Vec::new(),
        priority: Vec::new(),
        row_start: Vec::new(),
        row_len: Vec::new(),
        edges: Vec::new(),
        labels: Vec::new(),
    };
    let init_js: Vec<StateId> = quants.iter().map(|q| q.structure.initial).collect();
    let js0 = b.intern_js(init_js);
    let v0 = b.automaton_step(dpa.initial, js0)?;
    let mut next = 0;
    while next < b.pending.len() {
        let (v, q, js) = b.pending[next];
        next += 1;
        let q2 = dpa.step(q, b.js_letter[js as usize]);
        let root = b.selection(q2, js)?;
        b.set_row(v, &[root])?;
    }

    // Lay the rows out in vertex order.
    let n = b.owner.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(b.edges.len());
    offsets.push(0u32);
    for v in 0..n {
        let start = b.row_start[v] as usize;
        targets.extend_from_slice(&b.edges[start..start + b.row_len[v] as usize]);
        offsets.push(targets.len() as u32);
    }
    let automaton_steps = b.steps.len();
    let joint_states = b.js_letter.len();
    Ok(Arena {
        game: ParityGame {
            owner: b.owner,
            priority: b.priority,
            offsets,
            targets,
            initial: v0,
        },
        labels: opts.labels.then_some(b.labels),
        joint_states,
        automaton_steps,
    })
}
