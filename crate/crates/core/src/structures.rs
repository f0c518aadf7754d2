//! Multi-stage concurrent game structures, their well-formedness checks,
//! and the stutter and shift transformations.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

pub type StateId = u32;

/// Agent name added by [`stutter_transform`].
pub const SCHED: &str = "sched";
/// Proposition marking frozen steps in a stuttered structure.
pub const STUT: &str = "stut";

/// An agent whose move matters in some state, with the number of distinct
/// moves it has there. Moves are taken modulo `arity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Controller {
    pub agent: usize,
    pub arity: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub name: String,
    /// Agents deciding the successor here; all other agents are ignored.
    pub controllers: Vec<Controller>,
    /// Successor table in row-major order over `controllers` (the last
    /// controller varies fastest).
    pub successors: Vec<StateId>,
    /// Sorted indices into [`Mscgs::props`].
    pub labels: Vec<usize>,
}

impl State {
    /// Successor for one move per controller (already reduced modulo arity).
    pub fn successor_by_choice(&self, choice: &[u32]) -> StateId {
        let mut idx = 0usize;
        for (c, &m) in self.controllers.iter().zip(choice) {
            idx = idx * c.arity as usize + (m % c.arity) as usize;
        }
        self.successors[idx]
    }

    /// The agent whose choice this state represents in turn-based form.
    pub fn owner(&self) -> Option<usize> {
        self.controllers.first().map(|c| c.agent)
    }
}

/// A game structure with a stage map over its agents.
///
/// The transition function is total: for a global move vector `m` the
/// successor of `s` is `successors[index]` where each controller
/// contributes `m[agent] mod arity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mscgs {
    pub agents: Vec<String>,
    pub stages: BTreeMap<usize, u32>,
    pub props: Vec<String>,
    pub states: Vec<State>,
    pub initial: StateId,
}

impl Mscgs {
    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    pub fn stage(&self, agent: usize) -> u32 {
        self.stages.get(&agent).copied().unwrap_or(0)
    }

    pub fn max_stage(&self) -> u32 {
        self.stages.values().copied().max().unwrap_or(0)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, s: StateId) -> &State {
        &self.states[s as usize]
    }

    /// Bound on the move set: the largest arity of any controller.
    pub fn max_moves(&self) -> u32 {
        self.states
            .iter()
            .flat_map(|s| s.controllers.iter().map(|c| c.arity))
            .max()
            .unwrap_or(1)
    }

    /// The totalized transition function on a global move vector.
    pub fn step(&self, s: StateId, moves: &[u32]) -> StateId {
        let state = self.state(s);
        let choice: Vec<u32> = state
            .controllers
            .iter()
            .map(|c| moves[c.agent] % c.arity)
            .collect();
        state.successor_by_choice(&choice)
    }

    pub fn has_label(&self, s: StateId, prop: usize) -> bool {
        self.state(s).labels.binary_search(&prop).is_ok()
    }

    pub fn label_names(&self, s: StateId) -> Vec<&str> {
        self.state(s)
            .labels
            .iter()
            .map(|&p| self.props[p].as_str())
            .collect()
    }

    /// Every successor reachable by some move vector.
    pub fn successor_set(&self, s: StateId) -> BTreeSet<StateId> {
        self.state(s).successors.iter().copied().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub state: Option<StateId>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.state {
            Some(s) => write!(f, "{sev}: state {s}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// Findings of [`validate`]; empty iff the structure is well formed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.0.iter().filter(|d| d.severity == Severity::Error)
    }

    fn error(&mut self, state: Option<StateId>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            state,
        });
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

pub fn validate(g: &Mscgs) -> Diagnostics {
    let mut diags = Diagnostics::default();
    if g.states.is_empty() {
        diags.error(None, "structure has no states");
    } else if g.initial as usize >= g.states.len() {
        diags.error(None, format!("initial state {} does not exist", g.initial));
    }

    let names: BTreeSet<&str> = g.agents.iter().map(String::as_str).collect();
    if names.len() != g.agents.len() {
        diags.error(None, "duplicate agent names");
    }
    let missing: Vec<&str> = (0..g.agents.len())
        .filter(|a| !g.stages.contains_key(a))
        .map(|a| g.agents[a].as_str())
        .collect();
    if !missing.is_empty() {
        diags.error(
            None,
            format!("stage map undefined for agents {}", missing.join(", ")),
        );
    }
    if g.stages.keys().any(|&a| a >= g.agents.len()) {
        diags.error(None, "stage map mentions unknown agents");
    }
    let props: BTreeSet<&str> = g.props.iter().map(String::as_str).collect();
    if props.len() != g.props.len() {
        diags.error(None, "duplicate proposition names");
    }

    for (id, s) in g.states.iter().enumerate() {
        let id = Some(id as StateId);
        if s.successors.is_empty() {
            diags.error(id, "non-total transition: no successors");
            continue;
        }
        let mut seen = BTreeSet::new();
        let mut width = 1usize;
        for c in &s.controllers {
            if c.agent >= g.agents.len() {
                diags.error(id, format!("controller refers to unknown agent {}", c.agent));
            }
            if !seen.insert(c.agent) {
                diags.error(id, format!("agent {} controls the state twice", c.agent));
            }
            if c.arity == 0 {
                diags.error(id, "non-total transition: controller without moves");
            }
            width = width.saturating_mul(c.arity as usize);
        }
        if width != s.successors.len() {
            diags.error(
                id,
                format!(
                    "successor table has {} entries, controllers demand {width}",
                    s.successors.len()
                ),
            );
        }
        if s.successors.iter().any(|&t| t as usize >= g.states.len()) {
            diags.error(id, "successor out of range");
        }
        if s.labels.iter().any(|&p| p >= g.props.len()) {
            diags.error(id, "label refers to an unknown proposition");
        }
        if s.labels.windows(2).any(|w| w[0] >= w[1]) {
            diags.error(id, "labels are not sorted and unique");
        }
    }
    diags
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("agent `{SCHED}` already exists; cannot add a scheduler")]
    SchedPresent,
    #[error("proposition `{STUT}` already exists")]
    StutPresent,
    #[error("shift length must be at least 1")]
    ZeroShift,
}

/// Product with {0,1} before pruning: state `s` becomes `2s` (running) and
/// `2s + 1` (frozen). `sched` is the last controller of every state.
pub fn stutter_product(g: &Mscgs) -> Result<Mscgs, StructureError> {
    if g.agent_index(SCHED).is_some() {
        return Err(StructureError::SchedPresent);
    }
    if g.prop_index(STUT).is_some() {
        return Err(StructureError::StutPresent);
    }
    let sched = g.agents.len();
    let stut = g.props.len();
    let mut agents = g.agents.clone();
    agents.push(SCHED.to_string());
    let mut stages = g.stages.clone();
    stages.insert(sched, g.max_stage() + 1);
    let mut props = g.props.clone();
    props.push(STUT.to_string());

    let mut states = Vec::with_capacity(2 * g.states.len());
    for (id, s) in g.states.iter().enumerate() {
        for frozen in [false, true] {
            let mut controllers = s.controllers.clone();
            controllers.push(Controller {
                agent: sched,
                arity: 2,
            });
            let successors = s
                .successors
                .iter()
                .flat_map(|&t| [2 * t, 2 * id as StateId + 1])
                .collect();
            let mut labels = s.labels.clone();
            if frozen {
                labels.push(stut);
            }
            states.push(State {
                name: format!("({},{})", s.name, frozen as u8),
                controllers,
                successors,
                labels,
            });
        }
    }
    Ok(Mscgs {
        agents,
        stages,
        props,
        states,
        initial: 2 * g.initial,
    })
}

/// Adds a scheduler that may freeze the structure for a step; frozen
/// steps carry `stut`. Only reachable states are kept.
pub fn stutter_transform(g: &Mscgs) -> Result<Mscgs, StructureError> {
    Ok(prune_unreachable(&stutter_product(g)?))
}

/// Drops states not reachable from the initial state, keeping the
/// relative order of the survivors.
pub fn prune_unreachable(g: &Mscgs) -> Mscgs {
    let n = g.states.len();
    let mut reached = vec![false; n];
    let mut queue = VecDeque::from([g.initial]);
    reached[g.initial as usize] = true;
    while let Some(s) = queue.pop_front() {
        for &t in &g.state(s).successors {
            if !reached[t as usize] {
                reached[t as usize] = true;
                queue.push_back(t);
            }
        }
    }
    let mut remap = vec![StateId::MAX; n];
    let mut next = 0;
    for (i, r) in reached.iter().enumerate() {
        if *r {
            remap[i] = next;
            next += 1;
        }
    }
    let states = g
        .states
        .iter()
        .zip(&reached)
        .filter(|(_, r)| **r)
        .map(|(s, _)| State {
            successors: s.successors.iter().map(|&t| remap[t as usize]).collect(),
            ..s.clone()
        })
        .collect();
    Mscgs {
        states,
        initial: remap[g.initial as usize],
        ..g.clone()
    }
}

/// Prepends a chain of `k` unlabeled states in front of the initial state.
/// The chain states are owned by the first agent and have one move.
pub fn shift_transform(g: &Mscgs, k: usize) -> Result<Mscgs, StructureError> {
    if k == 0 {
        return Err(StructureError::ZeroShift);
    }
    let mut out = g.clone();
    let base = g.states.len() as StateId;
    let owner = Controller { agent: 0, arity: 1 };
    for i in 0..k as StateId {
        let next = if i + 1 == k as StateId {
            g.initial
        } else {
            base + i + 1
        };
        out.states.push(State {
            name: format!("shift{i}"),
            controllers: if g.agents.is_empty() {
                Vec::new()
            } else {
                vec![owner]
            },
            successors: vec![next],
            labels: Vec::new(),
        });
    }
    out.initial = base;
    Ok(out)
}

/// One step of a transform chain applied to a structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    Stutter,
    Shift(usize),
}

impl Transform {
    pub fn apply(self, g: &Mscgs) -> Result<Mscgs, StructureError> {
        match self {
            Transform::Stutter => stutter_transform(g),
            Transform::Shift(k) => shift_transform(g, k),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Stutter => f.write_str("stutter"),
            Transform::Shift(k) => write!(f, "shift={k}"),
        }
    }
}

/// Applies `chain` left to right.
pub fn apply_transforms(g: &Mscgs, chain: &[Transform]) -> Result<Mscgs, StructureError> {
    let mut out = g.clone();
    for t in chain {
        out = t.apply(&out)?;
    }
    Ok(out)
}

/// Deterministic Graphviz rendering: one node per state labeled with its id
/// and propositions, one edge per successor entry labeled with the moves.
pub fn export_dot(g: &Mscgs) -> String {
    let mut out = String::from("digraph mscgs {\n");
    for (id, _) in g.states.iter().enumerate() {
        let id = id as StateId;
        let labels = g.label_names(id).join(", ");
        let extra = if id == g.initial {
            ", peripheries=2"
        } else {
            ""
        };
        let _ = writeln!(out, "  s{id} [label=\"{id}\\n{{{labels}}}\"{extra}];");
    }
    for (id, s) in g.states.iter().enumerate() {
        let mut choice = vec![0u32; s.controllers.len()];
        for &t in &s.successors {
            let label: Vec<String> = s
                .controllers
                .iter()
                .zip(&choice)
                .map(|(c, m)| format!("{}={m}", g.agents[c.agent]))
                .collect();
            let _ = writeln!(out, "  s{id} -> s{t} [label=\"{}\"];", label.join(","));
            // Advance the row-major counter.
            for (j, c) in s.controllers.iter().enumerate().rev() {
                choice[j] += 1;
                if choice[j] < c.arity {
                    break;
                }
                choice[j] = 0;
            }
        }
    }
    out.push_str("}\n");
    out
}
