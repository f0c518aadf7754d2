use std::collections::BTreeSet;
use std::fmt;

use super::{AgentSpec, Atom, FormulaError, HyperFormula, LtlFormula, PathVar, Quantifier};

/// 1-based line and column of a token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl Position {
    pub fn start() -> Self {
        Position { line: 1, column: 1 }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Dot,
    At,
    Comma,
    OpenCoalition,
    CloseCoalition,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Nat(n) => return write!(f, "`{n}`"),
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Dot => "`.`",
            Tok::At => "`@`",
            Tok::Comma => "`,`",
            Tok::OpenCoalition => "`<<`",
            Tok::CloseCoalition => "`>>`",
            Tok::Bang => "`!`",
            Tok::Amp => "`&`",
            Tok::Pipe => "`|`",
            Tok::Arrow => "`->`",
            Tok::DoubleArrow => "`<->`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Position)>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let rest = &chars[i..];
        let starts = |s: &str| {
            let s: Vec<char> = s.chars().collect();
            rest.len() >= s.len() && rest[..s.len()] == s[..]
        };
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .iter()
                .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                .count();
            (Tok::Ident(rest[..len].iter().collect()), len)
        } else if c.is_ascii_digit() {
            let len = rest.iter().take_while(|c| c.is_ascii_digit()).count();
            let digits: String = rest[..len].iter().collect();
            let n = digits.parse().map_err(|_| FormulaError::Syntax {
                pos,
                message: format!("number `{digits}` out of range"),
            })?;
            (Tok::Nat(n), len)
        } else if starts("<->") {
            (Tok::DoubleArrow, 3)
        } else if starts("<<") {
            (Tok::OpenCoalition, 2)
        } else if starts(">>") {
            (Tok::CloseCoalition, 2)
        } else if starts("->") {
            (Tok::Arrow, 2)
        } else {
            let t = match c {
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '.' => Tok::Dot,
                '@' => Tok::At,
                ',' => Tok::Comma,
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                _ => {
                    return Err(FormulaError::Syntax {
                        pos,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            (t, 1)
        };
        out.push((tok, pos));
        advance(&mut i, &mut line, &mut col, len);
    }
    out.push((Tok::Eof, Position { line, column: col }));
    Ok(out)
}

const KEYWORDS: &[&str] = &["forall", "exists", "true", "false", "X", "G", "F", "U", "R"];

struct Parser {
    toks: Vec<(Tok, Position)>,
    at: usize,
    /// Path variables bound so far, with the position of their binder.
    bound: Vec<PathVar>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.at + k).min(self.toks.len() - 1);
        &self.toks[idx].0
    }

    fn pos(&self) -> Position {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), FormulaError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected {what}, found {other}")),
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn at_quantifier(&self) -> bool {
        self.is_ident("forall") || self.is_ident("exists") || *self.peek() == Tok::OpenCoalition
    }

    fn hyper(&mut self) -> Result<HyperFormula, FormulaError> {
        let negated = if *self.peek() == Tok::Bang {
            self.bump();
            true
        } else {
            false
        };
        let block_start = self.pos();
        let bracketed = if *self.peek() == Tok::LBracket {
            self.bump();
            true
        } else {
            false
        };
        let mut block = Vec::new();
        while self.at_quantifier() {
            block.push(self.quantifier()?);
        }
        if block.is_empty() {
            return self.error("expected a quantifier (`forall`, `exists` or `<<...>>`)");
        }
        if bracketed {
            self.expect(Tok::RBracket)?;
        } else if block.len() > 1 {
            return Err(FormulaError::UnsupportedFragment {
                pos: block_start,
                message: "sequential quantifier prefixes are not supported; \
                          group the quantifiers with [ ... ]"
                    .into(),
            });
        }
        let body = self.ltl()?;
        if *self.peek() != Tok::Eof {
            return self.error(format!("unexpected {} after formula", self.peek()));
        }
        Ok(HyperFormula {
            negated,
            block,
            bracketed,
            body,
        })
    }

    fn quantifier(&mut self) -> Result<Quantifier, FormulaError> {
        let spec = match self.bump() {
            Tok::Ident(s) if s == "forall" => AgentSpec::Forall,
            Tok::Ident(s) if s == "exists" => AgentSpec::Exists,
            Tok::OpenCoalition => {
                let mut agents = BTreeSet::new();
                agents.insert(self.ident("agent name")?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    agents.insert(self.ident("agent name")?);
                }
                self.expect(Tok::CloseCoalition)?;
                AgentSpec::Coalition(agents)
            }
            _ => unreachable!("checked by at_quantifier"),
        };
        let var_pos = self.pos();
        let var = PathVar::new(self.ident("path variable")?);
        if self.bound.contains(&var) {
            return Err(FormulaError::DuplicateVariable {
                var: var.to_string(),
                pos: var_pos,
            });
        }
        let system = if *self.peek() == Tok::At {
            self.bump();
            Some(self.ident("system name")?)
        } else {
            None
        };
        self.expect(Tok::Dot)?;
        self.bound.push(var.clone());
        Ok(Quantifier { spec, var, system })
    }

    fn ltl(&mut self) -> Result<LtlFormula, FormulaError> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::DoubleArrow {
            self.bump();
            let rhs = self.implication()?;
            lhs = LtlFormula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<LtlFormula, FormulaError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(LtlFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<LtlFormula, FormulaError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = LtlFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<LtlFormula, FormulaError> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.binary_temporal()?;
            lhs = LtlFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<LtlFormula, FormulaError> {
        let lhs = self.unary()?;
        if self.is_ident("U") {
            self.bump();
            return Ok(LtlFormula::until(lhs, self.binary_temporal()?));
        }
        if self.is_ident("R") {
            self.bump();
            return Ok(LtlFormula::release(lhs, self.binary_temporal()?));
        }
        Ok(lhs)
    }

    /// An identifier starts an atom when a `{` (possibly after `[n]`) follows.
    fn ident_is_atom(&self) -> bool {
        match self.peek_at(1) {
            Tok::LBrace => true,
            Tok::LBracket => {
                matches!(self.peek_at(2), Tok::Nat(_))
                    && *self.peek_at(3) == Tok::RBracket
                    && *self.peek_at(4) == Tok::LBrace
            }
            _ => false,
        }
    }

    fn unary(&mut self) -> Result<LtlFormula, FormulaError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(LtlFormula::not(self.unary()?))
            }
            Tok::Ident(s) if matches!(s.as_str(), "X" | "G" | "F") && !self.ident_is_atom() => {
                self.bump();
                match s.as_str() {
                    "X" => {
                        let mut k = 1;
                        if *self.peek() == Tok::LBracket {
                            self.bump();
                            k = match self.bump() {
                                Tok::Nat(n) => n,
                                other => {
                                    return self.error(format!(
                                        "expected a step count after `X[`, found {other}"
                                    ))
                                }
                            };
                            self.expect(Tok::RBracket)?;
                        }
                        Ok(LtlFormula::next_n(k, self.unary()?))
                    }
                    "G" => Ok(LtlFormula::globally(self.unary()?)),
                    _ => Ok(LtlFormula::eventually(self.unary()?)),
                }
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<LtlFormula, FormulaError> {
        if self.at_quantifier() {
            return Err(FormulaError::UnsupportedFragment {
                pos: self.pos(),
                message: "quantifiers inside the body are not supported".into(),
            });
        }
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.ltl()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(LtlFormula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(LtlFormula::False)
            }
            Tok::Ident(s) if self.ident_is_atom() || !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                let mut prop = s;
                if *self.peek() == Tok::LBracket {
                    self.bump();
                    match self.bump() {
                        Tok::Nat(n) => prop = format!("{prop}[{n}]"),
                        other => return self.error(format!("expected a bit index, found {other}")),
                    }
                    self.expect(Tok::RBracket)?;
                }
                self.expect(Tok::LBrace)?;
                let var_pos = self.pos();
                let var = match self.bump() {
                    Tok::Ident(v) => PathVar::new(v),
                    other => {
                        return Err(FormulaError::Syntax {
                            pos: var_pos,
                            message: format!("expected a path variable, found {other}"),
                        })
                    }
                };
                self.expect(Tok::RBrace)?;
                if !self.bound.contains(&var) {
                    return Err(FormulaError::UnboundVariable {
                        var: var.to_string(),
                        pos: var_pos,
                    });
                }
                Ok(LtlFormula::Atom(Atom { prop, var }))
            }
            other => self.error(format!("expected a formula, found {other}")),
        }
    }
}

/// Parses a hyperproperty in the textual formula syntax.
pub fn parse_formula(text: &str) -> Result<HyperFormula, FormulaError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        bound: Vec::new(),
    };
    p.hyper()
}

/// Parses a quantifier-free body; every path variable is accepted as bound.
pub fn parse_ltl(text: &str) -> Result<LtlFormula, FormulaError> {
    let toks = lex(text)?;
    let bound = toks
        .windows(3)
        .filter_map(|w| match (&w[0].0, &w[1].0, &w[2].0) {
            (Tok::LBrace, Tok::Ident(v), Tok::RBrace) => Some(PathVar::new(v.clone())),
            _ => None,
        })
        .collect();
    let mut p = Parser { toks, at: 0, bound };
    let f = p.ltl()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{to_nnf, LtlFormula as L};
    use proptest::prelude::*;

    #[test]
    fn parses_observational_determinism() {
        let f = parse_formula("[ forall p1 . forall p2 . ] G (o[0]{p1} <-> o[0]{p2})").unwrap();
        assert!(f.bracketed);
        assert!(!f.negated);
        assert_eq!(f.block.len(), 2);
        assert!(f.block.iter().all(|q| q.spec == AgentSpec::Forall));
        assert_eq!(
            f.body,
            L::globally(L::iff(L::atom("o[0]", "p1"), L::atom("o[0]", "p2")))
        );
    }

    #[test]
    fn parses_single_coalition() {
        let f = parse_formula("[ <<sched>> p1 . ] G true").unwrap();
        assert_eq!(f.block.len(), 1);
        assert_eq!(
            f.block[0].spec,
            AgentSpec::Coalition(["sched".to_string()].into_iter().collect())
        );
        assert_eq!(f.body, L::globally(L::True));
    }

    #[test]
    fn rejects_unbound_variable() {
        let err = parse_formula("[ forall p1 . ] F (x[0]{p2})").unwrap_err();
        match err {
            FormulaError::UnboundVariable { var, pos } => {
                assert_eq!(var, "p2");
                assert_eq!(pos, Position { line: 1, column: 25 });
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_sequential_prefixes() {
        assert!(matches!(
            parse_formula("[forall p. exists p.] true"),
            Err(FormulaError::DuplicateVariable { .. })
        ));
        assert!(matches!(
            parse_formula("forall p1. exists p2. G (a{p1} <-> a{p2})"),
            Err(FormulaError::UnsupportedFragment { .. })
        ));
        assert!(matches!(
            parse_formula("[forall p1.] G forall p2. a{p2}"),
            Err(FormulaError::UnsupportedFragment { .. })
        ));
        // A single unbracketed quantifier is the same game as the bracketed one.
        let f = parse_formula("exists p. F a{p}").unwrap();
        assert!(!f.bracketed);
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse_ltl("a{p} & b{p} U c{p} | d{p} -> e{p} -> g{p} <-> h{p}").unwrap();
        let atom = |s: &str| L::atom(s, "p");
        let expected = L::iff(
            L::implies(
                L::or(L::and(atom("a"), L::until(atom("b"), atom("c"))), atom("d")),
                L::implies(atom("e"), atom("g")),
            ),
            atom("h"),
        );
        assert_eq!(f, expected);
        let f = parse_ltl("a{p} U b{p} R c{p}").unwrap();
        assert_eq!(f, L::until(atom("a"), L::release(atom("b"), atom("c"))));
        let f = parse_ltl("!X G a{p}").unwrap();
        assert_eq!(f, L::not(L::next(L::globally(atom("a")))));
    }

    #[test]
    fn next_power_sugar_and_keyword_like_atoms() {
        let f = parse_ltl("X[3] h[0]{p3}").unwrap();
        assert_eq!(f, L::next_n(3, L::atom("h[0]", "p3")));
        let f = parse_ltl("G{p} & X[2]{p}").unwrap();
        assert_eq!(f, L::and(L::atom("G", "p"), L::atom("X[2]", "p")));
    }

    #[test]
    fn negated_block_and_systems() {
        let f = parse_formula("![forall a @ g. <<xi_N, xi_H>> b @ gs.] G (o{a} <-> X o{b})")
            .unwrap();
        assert!(f.negated);
        assert_eq!(f.block[0].system.as_deref(), Some("g"));
        assert_eq!(f.block[1].system.as_deref(), Some("gs"));
        let reparsed = parse_formula(&f.to_string()).unwrap();
        assert_eq!(reparsed, f);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_formula("[forall p.]\n  G (a{p} &)").unwrap_err();
        match err {
            FormulaError::Syntax { pos, .. } => assert_eq!(pos, Position { line: 2, column: 12 }),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_ltl() -> impl Strategy<Value = L> {
        let leaf = prop_oneof![
            Just(L::True),
            Just(L::False),
            prop::sample::select(vec!["a", "b", "o[0]", "stut"])
                .prop_flat_map(|p| prop::sample::select(vec!["p1", "p2"])
                    .prop_map(move |v| L::atom(p, v))),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(L::not),
                inner.clone().prop_map(L::next),
                inner.clone().prop_map(L::globally),
                inner.clone().prop_map(L::eventually),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| L::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| L::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| L::implies(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| L::iff(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| L::until(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| L::release(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(body in arb_ltl(), negated in any::<bool>()) {
            let f = HyperFormula {
                negated,
                block: vec![
                    Quantifier { spec: AgentSpec::Forall, var: PathVar::new("p1"), system: None },
                    Quantifier {
                        spec: AgentSpec::Coalition(["xi_N".to_string()].into_iter().collect()),
                        var: PathVar::new("p2"),
                        system: Some("g".into()),
                    },
                ],
                bracketed: true,
                body,
            };
            let text = f.to_string();
            prop_assert_eq!(parse_formula(&text).unwrap(), f);
        }

        #[test]
        fn nnf_is_idempotent(f in arb_ltl()) {
            let once = to_nnf(&f);
            prop_assert!(once.is_nnf());
            prop_assert_eq!(to_nnf(&once), once);
        }
    }
}
