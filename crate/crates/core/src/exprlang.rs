//! Scalar expressions over time `t` and state variables `x1..xn`.
//!
//! Scenario files use these for the drift and input-gain nonlinearities, the
//! reference signal and fault waveforms. Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?            right-associative
//! atom  := number | 't' | 'pi' | 'x'k | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `step(a)` is 0 for `a < 0` and 1 otherwise. Domain violations (log or sqrt
//! of negatives, division by zero, non-integer powers of non-positive bases,
//! overflow) are reported instead of producing NaN or infinity.

use std::fmt;

use thiserror::Error;

pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    ArityMismatch {
        offset: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("state variable x{index} at byte {offset} is out of range (state dimension {n})")]
    VariableOutOfRange {
        offset: usize,
        index: usize,
        n: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::ArityMismatch { offset, .. }
            | ParseError::VariableOutOfRange { offset, .. } => *offset,
        }
    }

    fn syntax(offset: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expression reads x{index} but the state has dimension {dim}")]
    MissingState { index: usize, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Step,
    Min,
    Max,
}

impl Func {
    const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Sign,
        Func::Step,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Step => "step",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const UNARY_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

/// Parsed expression tree. Immutable once built; `eval` is pure.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Time,
    /// 1-based state index.
    State(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Parses `source`, allowing state variables `x1..x{n}`.
    pub fn parse(source: &str, n: usize) -> Result<Expr, ParseError> {
        parse(source, n)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Time => t,
            Expr::State(k) => *x.get(k - 1).ok_or(EvalError::MissingState {
                index: *k,
                dim: x.len(),
            })?,
            Expr::Neg(e) => -e.eval(t, x)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval(t, x)?;
                let b = r.eval(t, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::Domain(format!("division of {a} by zero")));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if b.fract() != 0.0 && a <= 0.0 {
                            return Err(EvalError::Domain(format!(
                                "{a}^{b}: non-integer exponent needs a positive base"
                            )));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(t, x)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::Domain(format!("log({a})")));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain(format!("sqrt({a})")));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Step => {
                        if a < 0.0 {
                            0.0
                        } else {
                            1.0
                        }
                    }
                    Func::Min => a.min(args[1].eval(t, x)?),
                    Func::Max => a.max(args[1].eval(t, x)?),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain(format!("non-finite result in `{self}`")))
        }
    }

    /// Largest state index referenced (0 when the expression reads no state).
    pub fn max_state_index(&self) -> usize {
        match self {
            Expr::State(k) => *k,
            Expr::Num(_) | Expr::Pi | Expr::Time => 0,
            Expr::Neg(e) => e.max_state_index(),
            Expr::Binary(_, l, r) => l.max_state_index().max(r.max_state_index()),
            Expr::Call(_, args) => args.iter().map(Expr::max_state_index).max().unwrap_or(0),
        }
    }

    pub fn depth(&self) -> usize {
        1 + match self {
            Expr::Num(_) | Expr::Pi | Expr::Time | Expr::State(_) => 0,
            Expr::Neg(e) => e.depth(),
            Expr::Binary(_, l, r) => l.depth().max(r.depth()),
            Expr::Call(_, args) => args.iter().map(Expr::depth).max().unwrap_or(0),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => UNARY_PREC,
            _ => ATOM_PREC,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Compact rendering with the minimum parentheses needed to reparse to the
/// same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Time => f.write_str("t"),
            Expr::State(k) => write!(f, "x{k}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_operand(f, e, e.precedence() < UNARY_PREC)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (left_parens, right_parens) = match op {
                    BinOp::Pow => (l.precedence() <= p, r.precedence() < UNARY_PREC),
                    _ => (l.precedence() < p, r.precedence() <= p),
                };
                write_operand(f, l, left_parens)?;
                write!(f, "{}", op.symbol())?;
                write_operand(f, r, right_parens)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let mantissa = &src[start..i];
                if !mantissa.bytes().any(|b| b.is_ascii_digit()) {
                    return Err(ParseError::syntax(start, "malformed number"));
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let exp_start = i;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    let digits_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == digits_start {
                        return Err(ParseError::syntax(exp_start, "malformed exponent"));
                    }
                }
                let value: f64 = src[start..i]
                    .parse()
                    .map_err(|_| ParseError::syntax(start, "malformed number"))?;
                if !value.is_finite() {
                    return Err(ParseError::syntax(start, "number out of range"));
                }
                out.push((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), start));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::syntax(
                    start,
                    format!("unexpected character `{ch}`"),
                ));
            }
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::syntax(
                self.offset(),
                format!(
                    "expected {}, found {}",
                    describe(&want),
                    describe(self.peek())
                ),
            ))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::syntax(
                self.offset(),
                "expression nested too deeply",
            ));
        }
        let out = if *self.peek() == Tok::Op('-') {
            self.bump();
            self.unary().map(|e| Expr::Neg(Box::new(e)))
        } else {
            self.power()
        };
        self.depth -= 1;
        out
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, offset),
            other => Err(ParseError::syntax(
                offset,
                format!("expected a value, found {}", describe(&other)),
            )),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if let Some(func) = Func::from_name(&name) {
            if *self.peek() != Tok::LParen {
                return Err(ParseError::syntax(
                    self.offset(),
                    format!("expected `(` after function `{name}`"),
                ));
            }
            self.bump();
            let mut args = vec![self.expr()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
            self.expect(Tok::RParen)?;
            if args.len() != func.arity() {
                return Err(ParseError::ArityMismatch {
                    offset,
                    name,
                    expected: func.arity(),
                    found: args.len(),
                });
            }
            return Ok(Expr::Call(func, args));
        }
        match name.as_str() {
            "t" => return Ok(Expr::Time),
            "pi" => return Ok(Expr::Pi),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index = digits.parse::<usize>().unwrap_or(usize::MAX);
                if index == 0 || index > self.n {
                    return Err(ParseError::VariableOutOfRange {
                        offset,
                        index,
                        n: self.n,
                    });
                }
                return Ok(Expr::State(index));
            }
        }
        Err(ParseError::UnknownIdentifier { offset, name })
    }
}

/// Parses `source` for a state of dimension `n`.
pub fn parse(source: &str, n: usize) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    if toks.len() == 1 {
        return Err(ParseError::syntax(0, "empty expression"));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        n,
        depth: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ParseError::syntax(
            p.offset(),
            format!("unexpected {}", describe(p.peek())),
        ));
    }
    if e.depth() > MAX_DEPTH {
        return Err(ParseError::syntax(0, "expression nested too deeply"));
    }
    Ok(e)
}
