use std::collections::BTreeMap;

use super::{Decls, Expr, ImpError, ParsedProgram, Program};
use crate::formula::Position;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    Assign,
    Semi,
    Colon,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bang,
    Amp,
    Pipe,
    At,
    Star,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Nat(n) => format!("`{n}`"),
        Tok::Assign => "`:=`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Colon => "`:`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::At => "`@`".into(),
        Tok::Star => "`*`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Position)>, ImpError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Position { line, column };
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while chars
                .peek()
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
            {
                s.push(bump(&mut chars).unwrap());
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                s.push(bump(&mut chars).unwrap());
            }
            Tok::Nat(s.parse().map_err(|_| ImpError::Syntax {
                pos,
                message: format!("number `{s}` out of range"),
            })?)
        } else {
            bump(&mut chars);
            match c {
                ':' if chars.peek() == Some(&'=') => {
                    bump(&mut chars);
                    Tok::Assign
                }
                ':' => Tok::Colon,
                ';' => Tok::Semi,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '@' => Tok::At,
                '*' => Tok::Star,
                _ => {
                    return Err(ImpError::Syntax {
                        pos,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Position { line, column }));
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "var", "if", "else", "while", "true", "false", "read_H", "read_L",
];

struct Parser<'a> {
    toks: Vec<(Tok, Position)>,
    at: usize,
    decls: Decls,
    overrides: &'a BTreeMap<String, usize>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Position {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Position) {
        let t = self.toks[self.at].clone();
        if t.0 != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ImpError> {
        Err(ImpError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Position, ImpError> {
        if *self.peek() == tok {
            Ok(self.next().1)
        } else {
            self.error(format!(
                "expected {}, found {}",
                describe(&tok),
                describe(self.peek())
            ))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ImpError> {
        if self.is_keyword(kw) {
            self.next();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<(String, Position), ImpError> {
        match self.next() {
            (Tok::Ident(s), pos) if !KEYWORDS.contains(&s.as_str()) => Ok((s, pos)),
            (t, pos) => Err(ImpError::Syntax {
                pos,
                message: format!("expected identifier, found {}", describe(&t)),
            }),
        }
    }

    fn nat(&mut self) -> Result<usize, ImpError> {
        match self.next() {
            (Tok::Nat(n), _) => Ok(n),
            (t, pos) => Err(ImpError::Syntax {
                pos,
                message: format!("expected number, found {}", describe(&t)),
            }),
        }
    }

    fn variable(&self, name: &str, pos: Position) -> Result<usize, ImpError> {
        self.decls.index(name).ok_or_else(|| ImpError::Undeclared {
            var: name.to_string(),
            pos,
        })
    }

    fn program(&mut self) -> Result<ParsedProgram, ImpError> {
        while self.is_keyword("var") {
            self.next();
            let (name, pos) = self.ident()?;
            self.expect(Tok::Colon)?;
            let width_pos = self.pos();
            let mut width = self.nat()?;
            self.expect(Tok::Semi)?;
            if let Some(&w) = self.overrides.get(&name) {
                width = w;
            }
            if width == 0 {
                return Err(ImpError::ZeroWidth {
                    var: name,
                    pos: width_pos,
                });
            }
            if self.decls.index(&name).is_some() {
                return Err(ImpError::Redeclared { var: name, pos });
            }
            self.decls.vars.push((name, width));
        }
        let program = self.statements(|t| *t == Tok::Eof)?;
        Ok(ParsedProgram {
            decls: std::mem::take(&mut self.decls),
            program,
        })
    }

    /// One or more statements up to (not including) a token accepted by `end`,
    /// as a right-nested sequence.
    fn statements(&mut self, end: impl Fn(&Tok) -> bool) -> Result<Program, ImpError> {
        let mut stmts = Vec::new();
        while !end(self.peek()) {
            stmts.push(self.statement()?);
        }
        if stmts.is_empty() {
            return self.error("expected a statement");
        }
        let mut prog = stmts.pop().unwrap();
        while let Some(s) = stmts.pop() {
            prog = Program::Seq(Box::new(s), Box::new(prog));
        }
        Ok(prog)
    }

    fn block(&mut self) -> Result<Program, ImpError> {
        self.expect(Tok::LBrace)?;
        let p = self.statements(|t| matches!(t, Tok::RBrace | Tok::Eof))?;
        self.expect(Tok::RBrace)?;
        Ok(p)
    }

    fn guard(&mut self) -> Result<Expr, ImpError> {
        let pos = self.pos();
        let e = self.expr()?;
        let width = e.width(&self.decls);
        if width != 1 {
            return Err(ImpError::GuardWidth { width, pos });
        }
        Ok(e)
    }

    fn statement(&mut self) -> Result<Program, ImpError> {
        if self.is_keyword("if") {
            self.next();
            self.expect(Tok::LParen)?;
            if *self.peek() == Tok::Star {
                self.next();
                self.expect(Tok::RParen)?;
                let then = self.block()?;
                self.keyword("else")?;
                let other = self.block()?;
                return Ok(Program::IfStar(Box::new(then), Box::new(other)));
            }
            let guard = self.guard()?;
            self.expect(Tok::RParen)?;
            let then = self.block()?;
            self.keyword("else")?;
            let other = self.block()?;
            return Ok(Program::If(guard, Box::new(then), Box::new(other)));
        }
        if self.is_keyword("while") {
            self.next();
            self.expect(Tok::LParen)?;
            let guard = self.guard()?;
            self.expect(Tok::RParen)?;
            let body = self.block()?;
            return Ok(Program::While(guard, Box::new(body)));
        }
        let (name, pos) = self.ident()?;
        let var = self.variable(&name, pos)?;
        self.expect(Tok::Assign)?;
        let stmt = if self.is_keyword("read_H") {
            self.next();
            Program::ReadH(var)
        } else if self.is_keyword("read_L") {
            self.next();
            Program::ReadL(var)
        } else {
            let epos = self.pos();
            let e = self.expr()?;
            let (expected, found) = (self.decls.vars[var].1, e.width(&self.decls));
            if expected != found {
                return Err(ImpError::WidthMismatch {
                    expected,
                    found,
                    pos: epos,
                });
            }
            Program::Assign(var, e)
        };
        self.expect(Tok::Semi)?;
        Ok(stmt)
    }

    // Precedence, loosest first: `|`, `&`, `@`, `!`, postfix `[n]`.
    fn expr(&mut self) -> Result<Expr, ImpError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Pipe {
            let pos = self.next().1;
            let rhs = self.and_expr()?;
            self.same_width(&lhs, &rhs, pos)?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ImpError> {
        let mut lhs = self.concat_expr()?;
        while *self.peek() == Tok::Amp {
            let pos = self.next().1;
            let rhs = self.concat_expr()?;
            self.same_width(&lhs, &rhs, pos)?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn same_width(&self, a: &Expr, b: &Expr, pos: Position) -> Result<(), ImpError> {
        let (wa, wb) = (a.width(&self.decls), b.width(&self.decls));
        if wa == wb {
            Ok(())
        } else {
            Err(ImpError::WidthMismatch {
                expected: wa,
                found: wb,
                pos,
            })
        }
    }

    fn concat_expr(&mut self) -> Result<Expr, ImpError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::At {
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::Concat(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ImpError> {
        if *self.peek() == Tok::Bang {
            self.next();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ImpError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::LBracket {
            let pos = self.next().1;
            let n = self.nat()?;
            self.expect(Tok::RBracket)?;
            let width = e.width(&self.decls);
            if n >= width {
                return Err(ImpError::IndexOutOfRange {
                    index: n,
                    width,
                    pos,
                });
            }
            e = Expr::Index(Box::new(e), n);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ImpError> {
        match self.next() {
            (Tok::Ident(s), _) if s == "true" => Ok(Expr::True),
            (Tok::Ident(s), _) if s == "false" => Ok(Expr::False),
            (Tok::Ident(s), pos) if !KEYWORDS.contains(&s.as_str()) => {
                Ok(Expr::Var(self.variable(&s, pos)?))
            }
            (Tok::LParen, _) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            (t, pos) => Err(ImpError::Syntax {
                pos,
                message: format!("expected an expression, found {}", describe(&t)),
            }),
        }
    }
}

/// Parses a program, replacing the declared width of every variable named
/// in `overrides` before any width check.
pub fn parse_program_with_widths(
    text: &str,
    overrides: &BTreeMap<String, usize>,
) -> Result<ParsedProgram, ImpError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        decls: Decls::default(),
        overrides,
    };
    p.program()
}

pub fn parse_program(text: &str) -> Result<ParsedProgram, ImpError> {
    parse_program_with_widths(text, &BTreeMap::new())
}
