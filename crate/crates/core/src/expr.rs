//! Arithmetic expressions over `y1..yd` with exact symbolic derivatives.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' ['-'] integer)?
//! atom   := number | 'y' index | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; printed as `y{index + 1}`.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

fn folded(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn one() -> Self {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Some(e) = folded(x + y) {
                return e;
            }
        }
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Some(e) = folded(x - y) {
                return e;
            }
        }
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Some(e) = folded(x * y) {
                return e;
            }
        }
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        if a.as_const() == Some(-1.0) {
            return Expr::neg(b);
        }
        if b.as_const() == Some(-1.0) {
            return Expr::neg(a);
        }
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if y != 0.0 {
                if let Some(e) = folded(x / y) {
                    return e;
                }
            }
        }
        if b.is_one() {
            return a;
        }
        if a.is_zero() && b.as_const().is_none_or(|y| y != 0.0) {
            return Expr::zero();
        }
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        if k == 0 {
            return Expr::one();
        }
        if k == 1 {
            return a;
        }
        if let Some(x) = a.as_const() {
            if let Some(e) = folded(x.powi(k)) {
                return e;
            }
        }
        Expr::Pow(Box::new(a), k)
    }

    pub fn sin(a: Expr) -> Expr {
        match a.as_const().and_then(|x| folded(x.sin())) {
            Some(e) => e,
            None => Expr::Sin(Box::new(a)),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match a.as_const().and_then(|x| folded(x.cos())) {
            Some(e) => e,
            None => Expr::Cos(Box::new(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_const().and_then(|x| folded(x.exp())) {
            Some(e) => e,
            None => Expr::Exp(Box::new(a)),
        }
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.arity()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *y.get(*i).ok_or_else(|| {
                Error::Eval(format!(
                    "variable y{} not supplied (point has {} coordinates)",
                    i + 1,
                    y.len()
                ))
            })?,
            Expr::Neg(a) => -a.eval(y)?,
            Expr::Add(a, b) => a.eval(y)? + b.eval(y)?,
            Expr::Sub(a, b) => a.eval(y)? - b.eval(y)?,
            Expr::Mul(a, b) => a.eval(y)? * b.eval(y)?,
            Expr::Div(a, b) => {
                let den = b.eval(y)?;
                if den == 0.0 {
                    return Err(Error::Eval("division by zero".into()));
                }
                a.eval(y)? / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval(y)?;
                if base == 0.0 && *k < 0 {
                    return Err(Error::Eval("zero raised to a negative power".into()));
                }
                base.powi(*k)
            }
            Expr::Sin(a) => a.eval(y)?.sin(),
            Expr::Cos(a) => a.eval(y)?.cos(),
            Expr::Exp(a) => a.eval(y)?.exp(),
        };
        if !v.is_finite() {
            return Err(Error::Eval(format!("non-finite value in {self}")));
        }
        Ok(v)
    }

    /// Partial derivative with respect to the zero-based variable `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(j) => {
                if *j == i {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::neg(a.diff(i)),
            Expr::Add(a, b) => Expr::add(a.diff(i), b.diff(i)),
            Expr::Sub(a, b) => Expr::sub(a.diff(i), b.diff(i)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(i), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(i)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(i);
                let db = b.diff(i);
                if db.is_zero() {
                    return Expr::div(da, (**b).clone());
                }
                Expr::div(
                    Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                    Expr::pow((**b).clone(), 2),
                )
            }
            Expr::Pow(a, k) => Expr::mul(
                Expr::mul(Expr::Const(*k as f64), Expr::pow((**a).clone(), k - 1)),
                a.diff(i),
            ),
            Expr::Sin(a) => Expr::mul(Expr::cos((**a).clone()), a.diff(i)),
            Expr::Cos(a) => Expr::neg(Expr::mul(Expr::sin((**a).clone()), a.diff(i))),
            Expr::Exp(a) => Expr::mul(Expr::exp((**a).clone()), a.diff(i)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", -c)
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "y{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| Error::Parse {
                pos: start,
                msg: format!("malformed number '{lit}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected '{op}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let k = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
            }
            _ => Err(Error::Parse {
                pos,
                msg: "exponent must be an integer literal".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = match name.as_str() {
                    "sin" => Some(Expr::Sin as fn(Box<Expr>) -> Expr),
                    "cos" => Some(Expr::Cos as fn(Box<Expr>) -> Expr),
                    "exp" => Some(Expr::Exp as fn(Box<Expr>) -> Expr),
                    _ => None,
                } {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(func(Box::new(arg)));
                }
                let index = name
                    .strip_prefix('y')
                    .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|s| s.parse::<usize>().ok());
                match index {
                    Some(k) if k >= 1 && k <= self.dim => Ok(Expr::Var(k - 1)),
                    Some(_) => Err(Error::Parse {
                        pos,
                        msg: "variable index out of range".into(),
                    }),
                    None => Err(Error::Parse {
                        pos,
                        msg: format!("unknown identifier '{name}'"),
                    }),
                }
            }
            Tok::End => Err(Error::Parse {
                pos,
                msg: "unexpected end of input".into(),
            }),
            Tok::Op(c) => Err(Error::Parse {
                pos,
                msg: format!("unexpected '{c}'"),
            }),
        }
    }
}

/// Parse an expression in the variables `y1..y{dim}`.
pub fn parse(text: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
        dim,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}
