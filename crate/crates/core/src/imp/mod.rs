//! A small imperative language over bit vectors and its compilation into a
//! turn-based game structure.

mod parser;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::formula::Position;
use crate::structures::{Controller, Mscgs, State, StateId};

pub use parser::{parse_program, parse_program_with_widths};

pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImpError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Position, message: String },
    #[error("undeclared variable `{var}` at {pos}")]
    Undeclared { var: String, pos: Position },
    #[error("variable `{var}` declared twice at {pos}")]
    Redeclared { var: String, pos: Position },
    #[error("variable `{var}` must have width at least 1 ({pos})")]
    ZeroWidth { var: String, pos: Position },
    #[error("width mismatch at {pos}: expected {expected}, found {found}")]
    WidthMismatch {
        expected: usize,
        found: usize,
        pos: Position,
    },
    #[error("guard at {pos} has width {width}, expected 1")]
    GuardWidth { width: usize, pos: Position },
    #[error("index {index} out of range for width {width} at {pos}")]
    IndexOutOfRange {
        index: usize,
        width: usize,
        pos: Position,
    },
    #[error("state limit of {limit} exceeded while compiling the program")]
    StateLimit { limit: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector(pub Vec<bool>);

impl BitVector {
    pub fn zero(width: usize) -> Self {
        BitVector(vec![false; width])
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    /// The `k`-th vector of the given width in lexicographic order with
    /// false before true and index 0 most significant.
    pub fn nth(width: usize, k: u64) -> Self {
        BitVector((0..width).map(|i| (k >> (width - 1 - i)) & 1 == 1).collect())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Declared variables with their widths, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Decls {
    pub vars: Vec<(String, usize)>,
}

impl Decls {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|(n, _)| n == name)
    }

    pub fn width(&self, var: usize) -> usize {
        self.vars[var].1
    }

    pub fn name(&self, var: usize) -> &str {
        &self.vars[var].0
    }

    /// Propositions `x[i]` for every declared `x` and bit `i`.
    pub fn props(&self) -> Vec<String> {
        self.vars
            .iter()
            .flat_map(|(n, w)| (0..*w).map(move |i| format!("{n}[{i}]")))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    /// Index into [`Decls::vars`].
    Var(usize),
    True,
    False,
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Concat(Box<Expr>, Box<Expr>),
    Index(Box<Expr>, usize),
}

impl Expr {
    pub fn width(&self, decls: &Decls) -> usize {
        match self {
            Expr::Var(v) => decls.width(*v),
            Expr::True | Expr::False | Expr::Index(..) => 1,
            Expr::And(a, _) | Expr::Or(a, _) | Expr::Not(a) => a.width(decls),
            Expr::Concat(a, b) => a.width(decls) + b.width(decls),
        }
    }

    pub fn display<'a>(&'a self, decls: &'a Decls) -> impl fmt::Display + 'a {
        ExprDisplay(self, decls)
    }
}

struct ExprDisplay<'a>(&'a Expr, &'a Decls);

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.1;
        match self.0 {
            Expr::Var(v) => f.write_str(d.name(*v)),
            Expr::True => f.write_str("true"),
            Expr::False => f.write_str("false"),
            Expr::And(a, b) => write!(f, "({} & {})", a.display(d), b.display(d)),
            Expr::Or(a, b) => write!(f, "({} | {})", a.display(d), b.display(d)),
            Expr::Not(a) => write!(f, "!{}", a.display(d)),
            Expr::Concat(a, b) => write!(f, "({} @ {})", a.display(d), b.display(d)),
            Expr::Index(a, n) => write!(f, "({})[{n}]", a.display(d)),
        }
    }
}

/// Values of all declared variables, indexed like [`Decls::vars`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarState(pub Vec<BitVector>);

impl VarState {
    pub fn zero(decls: &Decls) -> Self {
        VarState(decls.vars.iter().map(|(_, w)| BitVector::zero(*w)).collect())
    }

    pub fn get(&self, var: usize) -> &BitVector {
        &self.0[var]
    }

    pub fn with(&self, var: usize, value: BitVector) -> Self {
        let mut out = self.clone();
        out.0[var] = value;
        out
    }
}

pub fn eval_expr(e: &Expr, sigma: &VarState) -> BitVector {
    match e {
        Expr::Var(v) => sigma.get(*v).clone(),
        Expr::True => BitVector(vec![true]),
        Expr::False => BitVector(vec![false]),
        Expr::And(a, b) => {
            let (a, b) = (eval_expr(a, sigma), eval_expr(b, sigma));
            BitVector(a.0.iter().zip(&b.0).map(|(x, y)| *x && *y).collect())
        }
        Expr::Or(a, b) => {
            let (a, b) = (eval_expr(a, sigma), eval_expr(b, sigma));
            BitVector(a.0.iter().zip(&b.0).map(|(x, y)| *x || *y).collect())
        }
        Expr::Not(a) => BitVector(eval_expr(a, sigma).0.iter().map(|x| !x).collect()),
        Expr::Concat(a, b) => {
            let mut v = eval_expr(a, sigma).0;
            v.extend(eval_expr(b, sigma).0);
            BitVector(v)
        }
        Expr::Index(a, n) => BitVector(vec![eval_expr(a, sigma).0[*n]]),
    }
}

fn holds(e: &Expr, sigma: &VarState) -> bool {
    eval_expr(e, sigma).0[0]
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Program {
    Assign(usize, Expr),
    ReadH(usize),
    ReadL(usize),
    If(Expr, Box<Program>, Box<Program>),
    IfStar(Box<Program>, Box<Program>),
    While(Expr, Box<Program>),
    Seq(Box<Program>, Box<Program>),
    Terminated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedProgram {
    pub decls: Decls,
    pub program: Program,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    N,
    H,
    L,
}

impl Player {
    pub const ALL: [Player; 3] = [Player::N, Player::H, Player::L];

    pub fn agent_name(self) -> &'static str {
        match self {
            Player::N => "xi_N",
            Player::H => "xi_H",
            Player::L => "xi_L",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

pub fn controlling_player(p: &Program) -> Player {
    match p {
        Program::ReadH(_) => Player::H,
        Program::ReadL(_) => Player::L,
        Program::Seq(first, _) => controlling_player(first),
        _ => Player::N,
    }
}

pub type ProgId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    Assign(usize, u32),
    ReadH(usize),
    ReadL(usize),
    If(u32, ProgId, ProgId),
    IfStar(ProgId, ProgId),
    While(u32, ProgId),
    Seq(ProgId, ProgId),
    Terminated,
}

const TERMINATED: ProgId = 0;

/// A configuration: program (hash-consed) and variable state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub prog: ProgId,
    pub vars: VarState,
}

/// Small-step interpreter over hash-consed programs. Structurally equal
/// programs receive the same id, so loop unrolling returns to known ids.
pub struct Interpreter {
    decls: Decls,
    nodes: Vec<Node>,
    node_ids: FxHashMap<Node, ProgId>,
    exprs: Vec<Expr>,
    expr_ids: FxHashMap<Expr, u32>,
    root: ProgId,
}

impl Interpreter {
    pub fn new(parsed: &ParsedProgram) -> Self {
        let mut it = Interpreter {
            decls: parsed.decls.clone(),
            nodes: Vec::new(),
            node_ids: FxHashMap::default(),
            exprs: Vec::new(),
            expr_ids: FxHashMap::default(),
            root: TERMINATED,
        };
        let t = it.node(Node::Terminated);
        debug_assert_eq!(t, TERMINATED);
        it.root = it.intern(&parsed.program);
        it
    }

    pub fn decls(&self) -> &Decls {
        &self.decls
    }

    pub fn initial(&self) -> Config {
        Config {
            prog: self.root,
            vars: VarState::zero(&self.decls),
        }
    }

    fn node(&mut self, n: Node) -> ProgId {
        if let Some(&id) = self.node_ids.get(&n) {
            return id;
        }
        let id = self.nodes.len() as ProgId;
        self.nodes.push(n);
        self.node_ids.insert(n, id);
        id
    }

    fn expr(&mut self, e: &Expr) -> u32 {
        if let Some(&id) = self.expr_ids.get(e) {
            return id;
        }
        let id = self.exprs.len() as u32;
        self.exprs.push(e.clone());
        self.expr_ids.insert(e.clone(), id);
        id
    }

    pub fn intern(&mut self, p: &Program) -> ProgId {
        let n = match p {
            Program::Assign(v, e) => Node::Assign(*v, self.expr(e)),
            Program::ReadH(v) => Node::ReadH(*v),
            Program::ReadL(v) => Node::ReadL(*v),
            Program::If(e, a, b) => {
                let e = self.expr(e);
                Node::If(e, self.intern(a), self.intern(b))
            }
            Program::IfStar(a, b) => Node::IfStar(self.intern(a), self.intern(b)),
            Program::While(e, body) => {
                let e = self.expr(e);
                Node::While(e, self.intern(body))
            }
            Program::Seq(a, b) => Node::Seq(self.intern(a), self.intern(b)),
            Program::Terminated => Node::Terminated,
        };
        self.node(n)
    }

    pub fn program(&self, id: ProgId) -> Program {
        let b = |id| Box::new(self.program(id));
        match self.nodes[id as usize] {
            Node::Assign(v, e) => Program::Assign(v, self.exprs[e as usize].clone()),
            Node::ReadH(v) => Program::ReadH(v),
            Node::ReadL(v) => Program::ReadL(v),
            Node::If(e, p, q) => Program::If(self.exprs[e as usize].clone(), b(p), b(q)),
            Node::IfStar(p, q) => Program::IfStar(b(p), b(q)),
            Node::While(e, p) => Program::While(self.exprs[e as usize].clone(), b(p)),
            Node::Seq(p, q) => Program::Seq(b(p), b(q)),
            Node::Terminated => Program::Terminated,
        }
    }

    pub fn player(&self, id: ProgId) -> Player {
        match self.nodes[id as usize] {
            Node::ReadH(_) => Player::H,
            Node::ReadL(_) => Player::L,
            Node::Seq(p, _) => self.player(p),
            _ => Player::N,
        }
    }

    /// Largest width of any variable read by the program.
    fn max_read_width(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::ReadH(v) | Node::ReadL(v) => Some(self.decls.width(*v)),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// All successor configurations in deterministic order.
    pub fn successors(&mut self, c: &Config) -> Vec<Config> {
        let mut out = Vec::new();
        self.step(c.prog, &c.vars, &mut out);
        out
    }

    fn step(&mut self, p: ProgId, sigma: &VarState, out: &mut Vec<Config>) {
        let done = |vars| Config {
            prog: TERMINATED,
            vars,
        };
        match self.nodes[p as usize] {
            Node::Assign(v, e) => {
                let value = eval_expr(&self.exprs[e as usize], sigma);
                out.push(done(sigma.with(v, value)));
            }
            Node::ReadH(v) | Node::ReadL(v) => {
                let w = self.decls.width(v);
                for k in 0..1u64 << w {
                    out.push(done(sigma.with(v, BitVector::nth(w, k))));
                }
            }
            Node::If(e, a, b) => {
                let next = if holds(&self.exprs[e as usize], sigma) { a } else { b };
                out.push(Config {
                    prog: next,
                    vars: sigma.clone(),
                });
            }
            Node::IfStar(a, b) => {
                for next in [a, b] {
                    out.push(Config {
                        prog: next,
                        vars: sigma.clone(),
                    });
                }
            }
            Node::While(e, body) => {
                let prog = if holds(&self.exprs[e as usize], sigma) {
                    self.node(Node::Seq(body, p))
                } else {
                    TERMINATED
                };
                out.push(Config {
                    prog,
                    vars: sigma.clone(),
                });
            }
            Node::Seq(a, b) => {
                let start = out.len();
                self.step(a, sigma, out);
                for i in start..out.len() {
                    let first = out[i].prog;
                    out[i].prog = if first == TERMINATED {
                        b
                    } else {
                        self.node(Node::Seq(first, b))
                    };
                }
            }
            Node::Terminated => out.push(done(sigma.clone())),
        }
    }
}

/// Result of [`build_cgs`]: the structure and the configuration behind
/// every state.
pub struct CompiledProgram {
    pub structure: Mscgs,
    pub configs: Vec<Config>,
}

/// Materializes the reachable configurations as a game structure with
/// agents `xi_N`, `xi_H`, `xi_L` (all at stage 0).
pub fn build_cgs(parsed: &ParsedProgram, limit: usize) -> Result<CompiledProgram, ImpError> {
    let mut it = Interpreter::new(parsed);
    if it.max_read_width() >= 63 || 1usize << it.max_read_width() > limit {
        return Err(ImpError::StateLimit { limit });
    }
    let decls = parsed.decls.clone();
    let props = decls.props();
    let mut offsets = Vec::with_capacity(decls.vars.len());
    let mut acc = 0;
    for (_, w) in &decls.vars {
        offsets.push(acc);
        acc += w;
    }

    let mut ids: FxHashMap<Config, StateId> = FxHashMap::default();
    let mut configs = vec![it.initial()];
    ids.insert(configs[0].clone(), 0);
    let mut states = Vec::new();
    let mut queue = VecDeque::from([0 as StateId]);
    while let Some(s) = queue.pop_front() {
        let c = configs[s as usize].clone();
        let succ = it.successors(&c);
        let mut successors = Vec::with_capacity(succ.len());
        for next in succ {
            let id = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    let id = configs.len() as StateId;
                    if configs.len() >= limit {
                        return Err(ImpError::StateLimit { limit });
                    }
                    ids.insert(next.clone(), id);
                    configs.push(next);
                    queue.push_back(id);
                    id
                }
            };
            successors.push(id);
        }
        let labels = c
            .vars
            .0
            .iter()
            .enumerate()
            .flat_map(|(v, bits)| {
                let base = offsets[v];
                bits.0
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b)
                    .map(move |(i, _)| base + i)
            })
            .collect();
        let name = format!(
            "p{} {}",
            c.prog,
            decls
                .vars
                .iter()
                .zip(&c.vars.0)
                .map(|((n, _), b)| format!("{n}={b}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
        states.push(State {
            name,
            controllers: vec![Controller {
                agent: it.player(c.prog).index(),
                arity: successors.len() as u32,
            }],
            successors,
            labels,
        });
    }

    let structure = Mscgs {
        agents: Player::ALL.iter().map(|p| p.agent_name().to_string()).collect(),
        stages: (0..Player::ALL.len()).map(|a| (a, 0)).collect::<BTreeMap<_, _>>(),
        props,
        states,
        initial: 0,
    };
    Ok(CompiledProgram { structure, configs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::validate;

    fn bits(s: &str) -> BitVector {
        BitVector(s.chars().map(|c| c == '1').collect())
    }

    #[test]
    fn parses_declarations_and_assignment() {
        let p = parse_program("var o:1; o := true;").unwrap();
        assert_eq!(p.decls.vars, vec![("o".to_string(), 1)]);
        assert_eq!(p.program, Program::Assign(0, Expr::True));
    }

    #[test]
    fn rejects_width_mismatch() {
        let err = parse_program("var x:2; x := true;").unwrap_err();
        assert!(matches!(
            err,
            ImpError::WidthMismatch {
                expected: 2,
                found: 1,
                ..
            }
        ));
        assert!(matches!(
            parse_program("var x:2; while (x) { x := x; }"),
            Err(ImpError::GuardWidth { width: 2, .. })
        ));
        assert!(matches!(
            parse_program("x := true;"),
            Err(ImpError::Undeclared { .. })
        ));
        assert!(matches!(
            parse_program("var x:0; x := x;"),
            Err(ImpError::ZeroWidth { .. })
        ));
    }

    #[test]
    fn width_overrides_apply_before_checks() {
        let text = "var o:1; o := o & !o;";
        let overrides = [("o".to_string(), 3)].into_iter().collect();
        let p = parse_program_with_widths(text, &overrides).unwrap();
        assert_eq!(p.decls.width(0), 3);
    }

    #[test]
    fn evaluates_expressions() {
        let d = Decls {
            vars: vec![("x".into(), 2), ("y".into(), 2)],
        };
        let sigma = VarState(vec![bits("10"), bits("11")]);
        assert_eq!(eval_expr(&Expr::Concat(Box::new(Expr::False), Box::new(Expr::True)), &sigma), bits("01"));
        let and = Expr::And(Box::new(Expr::Var(0)), Box::new(Expr::Var(1)));
        assert_eq!(eval_expr(&and, &sigma), bits("10"));
        let proj = Expr::Index(Box::new(Expr::Not(Box::new(Expr::Var(0)))), 1);
        assert_eq!(eval_expr(&proj, &sigma), bits("1"));
        assert_eq!(proj.width(&d), 1);
    }

    #[test]
    fn expression_precedence() {
        let p = parse_program("var a:1; var b:1; a := !a & b | (a @ b)[0];").unwrap();
        let Program::Assign(_, e) = p.program else {
            panic!()
        };
        assert_eq!(
            e.display(&p.decls).to_string(),
            "((!a & b) | ((a @ b))[0])"
        );
    }

    #[test]
    fn read_enumerates_lexicographically() {
        let p = parse_program("var x:2; x := read_H;").unwrap();
        let mut it = Interpreter::new(&p);
        let succ = it.successors(&it.initial());
        let values: Vec<String> = succ.iter().map(|c| c.vars.get(0).to_string()).collect();
        assert_eq!(values, ["00", "01", "10", "11"]);
        assert!(succ.iter().all(|c| c.prog == TERMINATED));
    }

    #[test]
    fn while_false_terminates() {
        let p = parse_program("var x:1; while (x) { x := false; }").unwrap();
        let mut it = Interpreter::new(&p);
        let succ = it.successors(&it.initial());
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].prog, TERMINATED);
        let again = it.successors(&succ[0]);
        assert_eq!(again, succ);
    }

    #[test]
    fn players() {
        let p = parse_program("var x:1; x := read_H; x := true;").unwrap();
        assert_eq!(controlling_player(&p.program), Player::H);
        let p = parse_program("var x:1; if (*) { x := read_L; } else { x := true; }").unwrap();
        assert_eq!(controlling_player(&p.program), Player::N);
        assert_eq!(controlling_player(&Program::Terminated), Player::N);
    }

    #[test]
    fn loops_fold_back_to_known_configs() {
        let p = parse_program("var o:1; while (true) { o := !o; }").unwrap();
        let g = build_cgs(&p, DEFAULT_STATE_LIMIT).unwrap().structure;
        assert!(validate(&g).is_empty());
        // while, o:=!o;while for each value of o
        assert_eq!(g.num_states(), 4);
    }

    #[test]
    fn state_limit() {
        let p = parse_program("var o:4; while (true) { o := read_H; }").unwrap();
        assert!(matches!(
            build_cgs(&p, 5),
            Err(ImpError::StateLimit { limit: 5 })
        ));
    }
}
