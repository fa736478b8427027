//! A small text format for pulse schedules.
//!
//! ```text
//! dim 3
//! dt 0.01
//! param lambda 2
//! param mu 0.5
//! repeat 100 {
//!   sys on dt
//!   sys off (lambda - mu) * dt
//!   gate 1 2
//!   sys off mu * dt
//!   gate 1 2
//! }
//! ```
//!
//! Declarations (`dim`, `dt`, `param`) come first. Statements are separated
//! by newlines or `;`. Gate levels are 1-based. Durations are arithmetic
//! expressions over numbers, `dt` and declared parameters; `mu` (and
//! `mu1`, `mu2`) are derived from `tau` as `tau * lambda / 2` when only the
//! latter is declared. A program consisting of a single top-level `repeat`
//! becomes one cycle repeated that many times; anything else is one cycle
//! run once. Nested repeats are unrolled.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{CycleItem, GateEvent, PulseSchedule, Segment};

/// Upper bound on the number of items after unrolling nested repeats.
pub const MAX_CYCLE_ITEMS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum DslErrorKind {
    Syntax(String),
    UndefinedParam(String),
    NegativeDuration(f64),
    InvalidGate(String),
    MissingDeclaration(&'static str),
    Invalid(String),
}

impl fmt::Display for DslErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DslErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            DslErrorKind::UndefinedParam(p) => write!(f, "undefined parameter `{p}`"),
            DslErrorKind::NegativeDuration(d) => write!(f, "negative duration {d}"),
            DslErrorKind::InvalidGate(m) => write!(f, "invalid gate: {m}"),
            DslErrorKind::MissingDeclaration(d) => write!(f, "missing `{d}` declaration"),
            DslErrorKind::Invalid(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct DslError {
    pub kind: DslErrorKind,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Sep,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            ';' => Some(Tok::Sep),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line: l0, column: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if c == '\n' {
            out.push(Token {
                tok: Tok::Sep,
                line: l0,
                column: c0,
            });
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| DslError {
                kind: DslErrorKind::Syntax(format!("malformed number `{text}`")),
                line: l0,
                column: c0,
            })?;
            out.push(Token {
                tok: Tok::Number(value),
                line: l0,
                column: c0,
            });
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                column: c0,
            });
        } else {
            return Err(DslError {
                kind: DslErrorKind::Syntax(format!("unexpected character `{c}`")),
                line: l0,
                column: c0,
            });
        }
        col += i - start;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 8] = ["dim", "dt", "param", "repeat", "sys", "on", "off", "gate"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    dim: Option<usize>,
    dt: Option<f64>,
    params: BTreeMap<String, f64>,
}

/// Parsed statement tree before unrolling.
enum Stmt {
    Seg(Segment),
    Gate(GateEvent),
    Repeat(usize, Vec<Stmt>),
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, t: &Token, kind: DslErrorKind) -> DslError {
        DslError {
            kind,
            line: t.line,
            column: t.column,
        }
    }

    fn syntax(&self, t: &Token, msg: impl Into<String>) -> DslError {
        self.err_at(t, DslErrorKind::Syntax(msg.into()))
    }

    fn skip_seps(&mut self) {
        while self.peek().tok == Tok::Sep {
            self.next();
        }
    }

    fn ident(&mut self) -> Result<(String, Token), DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(self.syntax(&t, format!("expected identifier, found {other:?}"))),
        }
    }

    fn signed_number(&mut self) -> Result<f64, DslError> {
        let neg = if self.peek().tok == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        let t = self.next();
        match t.tok {
            Tok::Number(v) => Ok(if neg { -v } else { v }),
            ref other => Err(self.syntax(&t, format!("expected number, found {other:?}"))),
        }
    }

    fn integer(&mut self) -> Result<(usize, Token), DslError> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e12 => Ok((v as usize, t)),
            ref other => Err(self.syntax(&t, format!("expected non-negative integer, found {other:?}"))),
        }
    }

    fn end_of_statement(&mut self) -> Result<(), DslError> {
        match self.peek().tok {
            Tok::Sep => {
                self.next();
                Ok(())
            }
            Tok::RBrace | Tok::Eof => Ok(()),
            ref other => {
                let t = self.peek().clone();
                Err(self.syntax(&t, format!("expected end of statement, found {other:?}")))
            }
        }
    }

    fn declarations(&mut self) -> Result<(), DslError> {
        loop {
            self.skip_seps();
            let t = self.peek().clone();
            let Tok::Ident(word) = &t.tok else { return Ok(()) };
            match word.as_str() {
                "dim" => {
                    self.next();
                    let (d, dt) = self.integer()?;
                    if !(crate::qmat::MIN_DIM..=crate::qmat::MAX_DIM).contains(&d) {
                        return Err(self.err_at(&dt, DslErrorKind::Invalid(format!("dim {d} out of range"))));
                    }
                    self.dim = Some(d);
                }
                "dt" => {
                    self.next();
                    let v = self.signed_number()?;
                    if !(v.is_finite() && v > 0.0) {
                        return Err(self.err_at(&t, DslErrorKind::Invalid(format!("dt must be positive, got {v}"))));
                    }
                    self.dt = Some(v);
                }
                "param" => {
                    self.next();
                    let (name, nt) = self.ident()?;
                    if KEYWORDS.contains(&name.as_str()) {
                        return Err(self.syntax(&nt, format!("`{name}` is reserved")));
                    }
                    let v = self.signed_number()?;
                    self.params.insert(name, v);
                }
                _ => return Ok(()),
            }
            self.end_of_statement()?;
        }
    }

    fn derive_offsets(&mut self) {
        let Some(&lambda) = self.params.get("lambda") else { return };
        for (tau, mu) in [("tau", "mu"), ("tau1", "mu1"), ("tau2", "mu2")] {
            if let (Some(&t), false) = (self.params.get(tau), self.params.contains_key(mu)) {
                self.params.insert(mu.to_string(), t * lambda / 2.0);
            }
        }
    }

    fn lookup(&self, name: &str, t: &Token) -> Result<f64, DslError> {
        if name == "dt" {
            return self.dt.ok_or_else(|| self.err_at(t, DslErrorKind::MissingDeclaration("dt")));
        }
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| self.err_at(t, DslErrorKind::UndefinedParam(name.to_string())))
    }

    fn expr(&mut self) -> Result<f64, DslError> {
        let mut v = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    v += self.term()?;
                }
                Tok::Minus => {
                    self.next();
                    v -= self.term()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn term(&mut self) -> Result<f64, DslError> {
        let mut v = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    v *= self.factor()?;
                }
                Tok::Slash => {
                    self.next();
                    v /= self.factor()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn factor(&mut self) -> Result<f64, DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Number(v) => Ok(*v),
            Tok::Ident(name) => self.lookup(name, &t),
            Tok::Minus => Ok(-self.factor()?),
            Tok::LParen => {
                let v = self.expr()?;
                let close = self.next();
                if close.tok != Tok::RParen {
                    return Err(self.syntax(&close, "expected `)`"));
                }
                Ok(v)
            }
            other => Err(self.syntax(&t, format!("expected expression, found {other:?}"))),
        }
    }

    fn statements(&mut self, nested: bool) -> Result<Vec<Stmt>, DslError> {
        let mut out = Vec::new();
        loop {
            self.skip_seps();
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof if nested => return Err(self.syntax(&t, "unclosed `{`")),
                Tok::Eof => return Ok(out),
                Tok::RBrace if nested => return Ok(out),
                Tok::RBrace => return Err(self.syntax(&t, "unmatched `}`")),
                Tok::Ident(w) => {
                    let w = w.clone();
                    self.next();
                    out.push(self.statement(&w, &t)?);
                    self.end_of_statement()?;
                }
                other => return Err(self.syntax(&t, format!("expected statement, found {other:?}"))),
            }
        }
    }

    fn statement(&mut self, word: &str, t: &Token) -> Result<Stmt, DslError> {
        match word {
            "sys" => {
                let (mode, mt) = self.ident()?;
                let on = match mode.as_str() {
                    "on" => true,
                    "off" => false,
                    _ => return Err(self.syntax(&mt, "expected `on` or `off`")),
                };
                let et = self.peek().clone();
                let d = self.expr()?;
                if !d.is_finite() {
                    return Err(self.err_at(&et, DslErrorKind::Invalid(format!("duration {d} is not finite"))));
                }
                if d < 0.0 {
                    return Err(self.err_at(&et, DslErrorKind::NegativeDuration(d)));
                }
                Ok(Stmt::Seg(if on { Segment::on(d) } else { Segment::off(d) }))
            }
            "gate" => {
                let dim = self
                    .dim
                    .ok_or_else(|| self.err_at(t, DslErrorKind::MissingDeclaration("dim")))?;
                let (a, _) = self.integer()?;
                let (b, _) = self.integer()?;
                if a == b || a == 0 || b == 0 || a > dim || b > dim {
                    return Err(self.err_at(
                        t,
                        DslErrorKind::InvalidGate(format!("levels {a}, {b} must be distinct and in 1..={dim}")),
                    ));
                }
                Ok(Stmt::Gate(GateEvent::new(a - 1, b - 1)))
            }
            "repeat" => {
                let (n, nt) = self.integer()?;
                if n == 0 {
                    return Err(self.err_at(&nt, DslErrorKind::Invalid("repeat count must be positive".into())));
                }
                let open = self.next();
                if open.tok != Tok::LBrace {
                    return Err(self.syntax(&open, "expected `{`"));
                }
                let body = self.statements(true)?;
                self.next();
                Ok(Stmt::Repeat(n, body))
            }
            "dim" | "dt" | "param" => Err(self.syntax(t, "declarations must precede statements")),
            other => Err(self.syntax(t, format!("unknown statement `{other}`"))),
        }
    }
}

fn unroll(stmts: &[Stmt], out: &mut Vec<CycleItem>) -> Result<(), DslErrorKind> {
    for s in stmts {
        match s {
            Stmt::Seg(seg) => out.push(CycleItem::Segment(*seg)),
            Stmt::Gate(g) => out.push(CycleItem::Gate(*g)),
            Stmt::Repeat(n, body) => {
                for _ in 0..*n {
                    unroll(body, out)?;
                    if out.len() > MAX_CYCLE_ITEMS {
                        return Err(DslErrorKind::Invalid(format!(
                            "unrolled cycle exceeds {MAX_CYCLE_ITEMS} items"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn parse_schedule(src: &str) -> Result<PulseSchedule, DslError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        dim: None,
        dt: None,
        params: BTreeMap::new(),
    };
    p.declarations()?;
    p.derive_offsets();
    let stmts = p.statements(false)?;
    let end = p.peek().clone();
    let at_end = |kind| DslError {
        kind,
        line: end.line,
        column: end.column,
    };
    let dim = p.dim.ok_or_else(|| at_end(DslErrorKind::MissingDeclaration("dim")))?;
    let dt = p.dt.ok_or_else(|| at_end(DslErrorKind::MissingDeclaration("dt")))?;

    let (body, repeats): (&[Stmt], usize) = match stmts.as_slice() {
        [Stmt::Repeat(n, body)] => (body, *n),
        all => (all, 1),
    };
    let mut cycle = Vec::new();
    unroll(body, &mut cycle).map_err(at_end)?;
    let schedule = PulseSchedule::new(dim, dt, cycle, repeats).map_err(|e| at_end(DslErrorKind::Invalid(e.to_string())))?;
    Ok(schedule.with_params(p.params))
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// Canonical text form; durations are written as literals with 12
/// significant digits.
pub fn emit_schedule(s: &PulseSchedule) -> String {
    let mut out = format!("dim {}\ndt {}\n", s.dim(), num(s.dt()));
    for (k, v) in s.params() {
        out.push_str(&format!("param {k} {}\n", num(*v)));
    }
    out.push_str(&format!("repeat {} {{\n", s.repeats()));
    for item in s.cycle() {
        match item {
            CycleItem::Segment(seg) => {
                let mode = if seg.system_on { "on" } else { "off" };
                out.push_str(&format!("  sys {mode} {}\n", num(seg.duration)));
            }
            CycleItem::Gate(g) => out.push_str(&format!("  gate {} {}\n", g.i + 1, g.j + 1)),
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{build_one_channel_schedule, build_two_channel_schedule, ScheduleWarning};
    use super::*;

    const ONE_CHANNEL: &str = "dim 3\ndt 0.01\nparam lambda 2\nparam mu 0.5\n\
        repeat 100 { sys on dt; sys off (lambda-mu)*dt; gate 1 2; sys off mu*dt; gate 1 2 }";

    #[test]
    fn parses_one_channel() {
        let s = parse_schedule(ONE_CHANNEL).unwrap();
        let built = build_one_channel_schedule(2.0, 0.5, 0.01, 100, 3).unwrap();
        assert!(s.approx_eq(&built, 0.0));
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn derives_mu_from_tau() {
        let src = "dim 3\ndt 0.01\nparam lambda 1\nparam tau1 0.8\nparam tau2 1.6\n\
            repeat 10 {\n sys on dt\n sys off (lambda - mu2) * dt\n gate 2 3\n sys off (mu2 - mu1) * dt\n \
            gate 1 2\n sys off mu1 * dt\n gate 1 2\n gate 2 3\n}\n";
        let s = parse_schedule(src).unwrap();
        let built = build_two_channel_schedule(1.0, 0.4, 0.8, 0.01, 10).unwrap();
        assert!(s.approx_eq(&built, 1e-15));
    }

    #[test]
    fn undefined_param_position() {
        let err = parse_schedule("dim 2\ndt 0.01\nsys off  nu * dt\n").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::UndefinedParam("nu".into()));
        assert_eq!((err.line, err.column), (3, 10));
    }

    #[test]
    fn negative_duration() {
        let err = parse_schedule("dim 2\ndt 0.01\nparam mu 3\nparam lambda 2\nsys off (lambda - mu)*dt").unwrap_err();
        assert!(matches!(err.kind, DslErrorKind::NegativeDuration(_)));
        assert_eq!(err.line, 5);
    }

    #[test]
    fn syntax_errors() {
        let err = parse_schedule("dim 2\ndt 0.01\nrepeat 3 { sys on dt\n").unwrap_err();
        assert!(matches!(err.kind, DslErrorKind::Syntax(_)));
        let err = parse_schedule("dim 2\ndt 0.01\nsys sideways dt").unwrap_err();
        assert_eq!((err.line, err.column), (3, 5));
        let err = parse_schedule("dim 2\ndt 0.01\ngate 1 3").unwrap_err();
        assert!(matches!(err.kind, DslErrorKind::InvalidGate(_)));
        let err = parse_schedule("dt 0.01\nsys on dt").unwrap_err();
        assert_eq!(err.kind, DslErrorKind::MissingDeclaration("dim"));
        let err = parse_schedule("dim 2\ndt 0.01\nsys on dt\nparam x 1").unwrap_err();
        assert!(matches!(err.kind, DslErrorKind::Syntax(_)));
        let err = parse_schedule("dim 2\ndt 0.01\nsys on dt $").unwrap_err();
        assert_eq!((err.line, err.column), (3, 11));
    }

    #[test]
    fn unbalanced_warns() {
        let s = parse_schedule("dim 3\ndt 0.01\nrepeat 2 { sys on dt; gate 1 2 }").unwrap();
        assert_eq!(s.warnings(), &[ScheduleWarning::UnbalancedGates]);
    }

    #[test]
    fn nested_repeat_unrolls() {
        let s = parse_schedule("dim 2\ndt 0.5\nsys on dt\nrepeat 3 { sys off 0.25 # c\n }").unwrap();
        assert_eq!(s.repeats(), 1);
        assert_eq!(s.cycle().len(), 4);
        assert!((s.cycle_duration() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn emit_round_trip() {
        let s = parse_schedule(ONE_CHANNEL).unwrap();
        let text = emit_schedule(&s);
        let back = parse_schedule(&text).unwrap();
        assert!(back.approx_eq(&s, 1e-11), "{text}");
        assert_eq!(back.params().len(), s.params().len());
    }
}
