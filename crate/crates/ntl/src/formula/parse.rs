//! Formula grammar.
//!
//! ```text
//! formula := or ( ('->' | '<->') formula )?      right-associative
//! or      := and ('|' or)?
//! and     := until ('&' and)?
//! until   := unary ('U{f}' until)?
//! unary   := '!' unary | '<f>' unary | '[f]' unary
//!          | 'F{f}' unary | 'G{f}' unary | 'Fr' unary | 'Gr' unary
//!          | 'mu' ID '.' formula | 'nu' ID '.' formula | atom
//! atom    := ID | 'true' | 'false' | '(' formula ')'
//! ```
//!
//! `f` ranges over `g u a - p c`. `#` starts a line comment. Sugar (`true`,
//! `false`, `->`, `<->`, `U`, `F`, `G`, `Fr`, `Gr`) is expanded during
//! parsing; fresh binders use the reserved `__s` prefix. `<->` doubles as the
//! caller-next operator when it occurs in operand position.

use super::{Formula, SuccessorType};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bang,
    Amp,
    Pipe,
    Arrow,
    /// `<->`: iff in operator position, caller-next in operand position.
    LtDashGt,
    Next(SuccessorType),
    DualNext(SuccessorType),
    Mu,
    Nu,
    Dot,
    Until(SuccessorType),
    Finally(SuccessorType),
    Globally(SuccessorType),
    Fr,
    Gr,
    True,
    False,
    LParen,
    RParen,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(s: &'a str) -> Self {
        Lexer { chars: s.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { line: self.line, col: self.col, msg: msg.into() })
    }

    fn succ_letter(&mut self) -> Result<SuccessorType, ParseError> {
        match self.bump() {
            Some(c) => SuccessorType::from_letter(c)
                .ok_or(())
                .or_else(|_| self.err(format!("unknown successor letter '{c}'"))),
            None => self.err("unexpected end of input in successor letter"),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => self.err(format!("expected '{want}', found '{c}'")),
            None => self.err(format!("expected '{want}', found end of input")),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            if self.chars.peek() == Some(&'#') {
                while !matches!(self.chars.peek(), None | Some('\n')) {
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.bump() else { break };
            let tok = match c {
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '.' => Tok::Dot,
                '-' => {
                    self.expect('>')?;
                    Tok::Arrow
                }
                '<' => {
                    if self.chars.peek() == Some(&'-') {
                        self.bump();
                        self.expect('>')?;
                        Tok::LtDashGt
                    } else {
                        let f = self.succ_letter()?;
                        self.expect('>')?;
                        Tok::Next(f)
                    }
                }
                '[' => {
                    let f = self.succ_letter()?;
                    self.expect(']')?;
                    Tok::DualNext(f)
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut s = String::from(c);
                    while matches!(self.chars.peek(), Some(c) if c.is_alphanumeric() || *c == '_' || *c == '\'')
                    {
                        s.push(self.bump().unwrap());
                    }
                    match s.as_str() {
                        "mu" => Tok::Mu,
                        "nu" => Tok::Nu,
                        "Fr" => Tok::Fr,
                        "Gr" => Tok::Gr,
                        "true" => Tok::True,
                        "false" => Tok::False,
                        "U" | "F" | "G" if self.chars.peek() == Some(&'{') => {
                            self.bump();
                            let f = self.succ_letter()?;
                            self.expect('}')?;
                            match s.as_str() {
                                "U" => Tok::Until(f),
                                "F" => Tok::Finally(f),
                                _ => Tok::Globally(f),
                            }
                        }
                        _ => Tok::Ident(s),
                    }
                }
                c => return self.err(format!("unexpected character '{c}'")),
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    fresh: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .or_else(|| self.toks.last().map(|(_, l, c)| (*l, *c + 1)))
            .unwrap_or((1, 1));
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn fresh(&mut self) -> String {
        let n = self.fresh;
        self.fresh += 1;
        format!("__s{n}")
    }

    /// Rename every binder to a fresh name; used when sugar duplicates a
    /// subformula so condition (i) still holds.
    fn alpha_fresh(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::Atom(_) | Formula::Var(_) => f.clone(),
            Formula::Not(p) => Formula::not(self.alpha_fresh(p)),
            Formula::Or(a, b) => Formula::or(self.alpha_fresh(a), self.alpha_fresh(b)),
            Formula::And(a, b) => Formula::and(self.alpha_fresh(a), self.alpha_fresh(b)),
            Formula::Next(s, p) => Formula::next(*s, self.alpha_fresh(p)),
            Formula::DualNext(s, p) => Formula::dual_next(*s, self.alpha_fresh(p)),
            Formula::Mu(x, p) | Formula::Nu(x, p) => {
                let x2 = self.fresh();
                let body = super::substitute(p, &Formula::Var(x2.clone()), x);
                let body = self.alpha_fresh(&body);
                if matches!(f, Formula::Mu(..)) {
                    Formula::Mu(x2, Box::new(body))
                } else {
                    Formula::Nu(x2, Box::new(body))
                }
            }
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        match self.peek() {
            Some(Tok::Arrow) => {
                self.bump();
                let rhs = self.formula()?;
                Ok(Formula::or(Formula::not(lhs), rhs))
            }
            Some(Tok::LtDashGt) => {
                self.bump();
                let rhs = self.formula()?;
                let (l2, r2) = (self.alpha_fresh(&lhs), self.alpha_fresh(&rhs));
                Ok(Formula::and(
                    Formula::or(Formula::not(lhs), rhs),
                    Formula::or(Formula::not(r2), l2),
                ))
            }
            _ => Ok(lhs),
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.and()?;
        if self.peek() == Some(&Tok::Pipe) {
            self.bump();
            let rhs = self.or()?;
            Ok(Formula::or(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.until()?;
        if self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.and()?;
            Ok(Formula::and(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn mk_until(&mut self, f: SuccessorType, lhs: Formula, rhs: Formula) -> Formula {
        // phi1 U{f} phi2 = mu X. phi2 | (phi1 & <f> X)
        let x = self.fresh();
        Formula::Mu(
            x.clone(),
            Box::new(Formula::or(rhs, Formula::and(lhs, Formula::next(f, Formula::Var(x))))),
        )
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if let Some(Tok::Until(f)) = self.peek().cloned() {
            self.bump();
            let rhs = self.until()?;
            Ok(self.mk_until(f, lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Next(f)) => {
                self.bump();
                Ok(Formula::next(f, self.unary()?))
            }
            // `<->` in operand position is the caller next operator
            Some(Tok::LtDashGt) => {
                self.bump();
                Ok(Formula::next(SuccessorType::Caller, self.unary()?))
            }
            Some(Tok::DualNext(f)) => {
                self.bump();
                Ok(Formula::dual_next(f, self.unary()?))
            }
            Some(Tok::Finally(f)) => {
                self.bump();
                let p = self.unary()?;
                Ok(self.mk_until(f, Formula::tt(), p))
            }
            Some(Tok::Globally(f)) => {
                self.bump();
                let p = self.unary()?;
                let inner = self.mk_until(f, Formula::tt(), Formula::not(p));
                Ok(Formula::not(inner))
            }
            Some(Tok::Fr) => {
                self.bump();
                let p = self.unary()?;
                Ok(self.mk_fr(p))
            }
            Some(Tok::Gr) => {
                self.bump();
                let p = self.unary()?;
                let inner = self.mk_fr(Formula::not(p));
                Ok(Formula::not(inner))
            }
            Some(Tok::Mu) | Some(Tok::Nu) => {
                let is_mu = self.bump() == Some(Tok::Mu);
                let Some(Tok::Ident(x)) = self.bump() else {
                    return self.err("expected variable name after fixpoint");
                };
                if self.bump() != Some(Tok::Dot) {
                    return self.err("expected '.' after fixpoint variable");
                }
                let body = self.formula()?;
                Ok(if is_mu {
                    Formula::Mu(x, Box::new(body))
                } else {
                    Formula::Nu(x, Box::new(body))
                })
            }
            _ => self.atom(),
        }
    }

    fn mk_fr(&mut self, p: Formula) -> Formula {
        // Fr phi = mu X. phi | (<g> X | <c> X)
        let x = self.fresh();
        Formula::Mu(
            x.clone(),
            Box::new(Formula::or(
                p,
                Formula::or(
                    Formula::next(SuccessorType::Global, Formula::Var(x.clone())),
                    Formula::next(SuccessorType::Child, Formula::Var(x)),
                ),
            )),
        )
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            // Identifiers start out as variables; a post-pass turns unbound
            // ones into atoms once binder scopes are known.
            Some(Tok::Ident(s)) => Ok(Formula::Var(s)),
            Some(Tok::True) => Ok(Formula::tt()),
            Some(Tok::False) => Ok(Formula::ff()),
            Some(Tok::LParen) => {
                let f = self.formula()?;
                if self.bump() != Some(Tok::RParen) {
                    self.pos -= 1;
                    return self.err("expected ')'");
                }
                Ok(f)
            }
            Some(t) => {
                self.pos -= 1;
                self.err(format!("unexpected token {t:?}"))
            }
            None => self.err("unexpected end of input"),
        }
    }
}

fn resolve_idents(f: &Formula, bound: &mut Vec<String>) -> Formula {
    match f {
        Formula::Var(x) => {
            if bound.iter().any(|b| b == x) {
                Formula::Var(x.clone())
            } else {
                Formula::Atom(x.clone())
            }
        }
        Formula::Atom(a) => Formula::Atom(a.clone()),
        Formula::Not(p) => Formula::not(resolve_idents(p, bound)),
        Formula::Or(a, b) => Formula::or(resolve_idents(a, bound), resolve_idents(b, bound)),
        Formula::And(a, b) => Formula::and(resolve_idents(a, bound), resolve_idents(b, bound)),
        Formula::Next(s, p) => Formula::next(*s, resolve_idents(p, bound)),
        Formula::DualNext(s, p) => Formula::dual_next(*s, resolve_idents(p, bound)),
        Formula::Mu(x, p) | Formula::Nu(x, p) => {
            bound.push(x.clone());
            let body = resolve_idents(p, bound);
            bound.pop();
            if matches!(f, Formula::Mu(..)) {
                Formula::Mu(x.clone(), Box::new(body))
            } else {
                Formula::Nu(x.clone(), Box::new(body))
            }
        }
    }
}

/// Parse a formula, expanding all syntactic sugar into the nine core
/// constructors.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser { toks, pos: 0, fresh: 0 };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return p.err("trailing input after formula");
    }
    Ok(resolve_idents(&f, &mut Vec::new()))
}
