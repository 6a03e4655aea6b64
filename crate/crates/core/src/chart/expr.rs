//! Coordinate expressions.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' '-'? integer)?
//! base   := number | 'x' digit+ | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt | tanh
//! ```
//!
//! Coordinates are written `x1 .. xn` and stored zero-based.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use super::scalar::Scalar;
use crate::error::{GeometryError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

/// Expression tree over the chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<ScalarExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Pow(Box<ScalarExpr>, i32),
    Func(Func, Box<ScalarExpr>),
}

use ScalarExpr as E;

impl ScalarExpr {
    pub fn constant(c: f64) -> Self {
        E::Const(c)
    }

    pub fn zero() -> Self {
        E::Const(0.0)
    }

    pub fn one() -> Self {
        E::Const(1.0)
    }

    /// Zero-based coordinate `x_{index+1}`.
    pub fn var(index: usize) -> Self {
        E::Var(index)
    }

    /// Parse and check that only `x1..=xn` occur.
    pub fn parse_in(src: &str, n: usize) -> Result<Self> {
        Parser::new(src, Some(n)).parse()
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            E::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Largest zero-based variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            E::Const(_) => None,
            E::Var(i) => Some(*i),
            E::Neg(a) | E::Pow(a, _) | E::Func(_, a) => a.max_var(),
            E::Add(a, b) | E::Sub(a, b) | E::Mul(a, b) | E::Div(a, b) => match (a.max_var(), b.max_var()) {
                (Some(p), Some(q)) => Some(p.max(q)),
                (p, q) => p.or(q),
            },
        }
    }

    /// Evaluate at `x`. Division by zero, `log` of a non-positive number,
    /// `sqrt` of a negative number and non-finite results are domain errors.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        let v = self.eval_inner(x)?;
        if !v.is_finite() {
            return Err(GeometryError::Domain(format!(
                "expression `{self}` is not finite at {:?}",
                x.iter().map(Scalar::re).collect::<Vec<_>>()
            )));
        }
        Ok(v)
    }

    fn eval_inner<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Ok(match self {
            E::Const(c) => S::from_f64(*c),
            E::Var(i) => *x.get(*i).ok_or_else(|| {
                GeometryError::Dimension(format!("variable x{} used on a {}-dimensional chart", i + 1, x.len()))
            })?,
            E::Neg(a) => -a.eval_inner(x)?,
            E::Add(a, b) => a.eval_inner(x)? + b.eval_inner(x)?,
            E::Sub(a, b) => a.eval_inner(x)? - b.eval_inner(x)?,
            E::Mul(a, b) => a.eval_inner(x)? * b.eval_inner(x)?,
            E::Div(a, b) => {
                let num = a.eval_inner(x)?;
                let den = b.eval_inner(x)?;
                if den.re() == 0.0 {
                    return Err(GeometryError::Domain(format!("division by zero in `{self}`")));
                }
                num / den
            }
            E::Pow(a, k) => {
                let base = a.eval_inner(x)?;
                if *k < 0 && base.re() == 0.0 {
                    return Err(GeometryError::Domain(format!("zero to a negative power in `{self}`")));
                }
                base.powi(*k)
            }
            E::Func(f, a) => {
                let v = a.eval_inner(x)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Tanh => v.tanh(),
                    Func::Log => {
                        if v.re() <= 0.0 {
                            return Err(GeometryError::Domain(format!(
                                "log of non-positive value {} in `{self}`",
                                v.re()
                            )));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v.re() < 0.0 {
                            return Err(GeometryError::Domain(format!(
                                "sqrt of negative value {} in `{self}`",
                                v.re()
                            )));
                        }
                        v.sqrt()
                    }
                }
            }
        })
    }

    /// Symbolic partial derivative with respect to the zero-based coordinate
    /// `var`. Only trivial constant folding is applied.
    pub fn diff(&self, var: usize) -> ScalarExpr {
        match self {
            E::Const(_) => E::zero(),
            E::Var(i) => E::Const(if *i == var { 1.0 } else { 0.0 }),
            E::Neg(a) => -a.diff(var),
            E::Add(a, b) => a.diff(var) + b.diff(var),
            E::Sub(a, b) => a.diff(var) - b.diff(var),
            E::Mul(a, b) => a.diff(var) * (**b).clone() + (**a).clone() * b.diff(var),
            E::Div(a, b) => {
                let num = a.diff(var) * (**b).clone() - (**a).clone() * b.diff(var);
                num / (**b).clone().powi(2)
            }
            E::Pow(a, k) => E::Const(*k as f64) * (**a).clone().powi(k - 1) * a.diff(var),
            E::Func(f, a) => {
                let inner = (**a).clone();
                let da = a.diff(var);
                let outer = match f {
                    Func::Sin => inner.cos(),
                    Func::Cos => -inner.sin(),
                    Func::Exp => inner.exp(),
                    Func::Log => E::one() / inner,
                    Func::Sqrt => E::one() / (E::Const(2.0) * inner.sqrt()),
                    Func::Tanh => E::one() - inner.tanh().powi(2),
                };
                outer * da
            }
        }
    }

    /// Replace every coordinate `x_{i+1}` by `values[i]`.
    pub fn substitute(&self, values: &[ScalarExpr]) -> ScalarExpr {
        match self {
            E::Const(c) => E::Const(*c),
            E::Var(i) => values[*i].clone(),
            E::Neg(a) => -a.substitute(values),
            E::Add(a, b) => a.substitute(values) + b.substitute(values),
            E::Sub(a, b) => a.substitute(values) - b.substitute(values),
            E::Mul(a, b) => a.substitute(values) * b.substitute(values),
            E::Div(a, b) => a.substitute(values) / b.substitute(values),
            E::Pow(a, k) => a.substitute(values).powi(*k),
            E::Func(f, a) => E::apply(*f, a.substitute(values)),
        }
    }

    pub fn powi(self, k: i32) -> ScalarExpr {
        match (k, &self) {
            (0, _) => E::one(),
            (1, _) => self,
            (_, E::Const(c)) if c.powi(k).is_finite() => E::Const(c.powi(k)),
            _ => E::Pow(Box::new(self), k),
        }
    }

    pub fn apply(f: Func, arg: ScalarExpr) -> ScalarExpr {
        if let E::Const(c) = arg {
            let v = match f {
                Func::Sin => c.sin(),
                Func::Cos => c.cos(),
                Func::Exp => c.exp(),
                Func::Log => c.ln(),
                Func::Sqrt => c.sqrt(),
                Func::Tanh => c.tanh(),
            };
            if v.is_finite() {
                return E::Const(v);
            }
        }
        E::Func(f, Box::new(arg))
    }

    pub fn sin(self) -> ScalarExpr {
        E::apply(Func::Sin, self)
    }
    pub fn cos(self) -> ScalarExpr {
        E::apply(Func::Cos, self)
    }
    pub fn exp(self) -> ScalarExpr {
        E::apply(Func::Exp, self)
    }
    pub fn log(self) -> ScalarExpr {
        E::apply(Func::Log, self)
    }
    pub fn sqrt(self) -> ScalarExpr {
        E::apply(Func::Sqrt, self)
    }
    pub fn tanh(self) -> ScalarExpr {
        E::apply(Func::Tanh, self)
    }

    fn precedence(&self) -> u8 {
        match self {
            E::Add(..) | E::Sub(..) => 1,
            E::Mul(..) | E::Div(..) => 2,
            E::Neg(_) => 3,
            E::Pow(..) => 4,
            E::Const(c) if *c < 0.0 || c.is_sign_negative() => 0,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            E::Const(c) => write!(f, "{c}")?,
            E::Var(i) => write!(f, "x{}", i + 1)?,
            E::Neg(a) => {
                f.write_str("-")?;
                a.write_prec(f, 3)?;
            }
            E::Add(a, b) | E::Sub(a, b) => {
                a.write_prec(f, 1)?;
                f.write_str(if matches!(self, E::Add(..)) { " + " } else { " - " })?;
                b.write_prec(f, 2)?;
            }
            E::Mul(a, b) | E::Div(a, b) => {
                a.write_prec(f, 2)?;
                f.write_str(if matches!(self, E::Mul(..)) { "*" } else { "/" })?;
                b.write_prec(f, 4)?;
            }
            E::Pow(a, k) => {
                a.write_prec(f, 5)?;
                write!(f, "^{k}")?;
            }
            E::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_prec(f, 0)?;
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

impl FromStr for ScalarExpr {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        Parser::new(s, None).parse()
    }
}

impl Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => E::Const(a + b),
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            _ => E::Add(Box::new(self), Box::new(rhs)),
        }
    }
}

impl Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => E::Const(a - b),
            (Some(0.0), _) => -rhs,
            (_, Some(0.0)) => self,
            _ => E::Sub(Box::new(self), Box::new(rhs)),
        }
    }
}

impl Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => E::Const(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => E::zero(),
            (Some(1.0), _) => rhs,
            (_, Some(1.0)) => self,
            _ => E::Mul(Box::new(self), Box::new(rhs)),
        }
    }
}

impl Div for ScalarExpr {
    type Output = ScalarExpr;
    fn div(self, rhs: ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => E::Const(a / b),
            (Some(0.0), _) => E::zero(),
            (_, Some(1.0)) => self,
            _ => E::Div(Box::new(self), Box::new(rhs)),
        }
    }
}

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        match self {
            E::Const(c) => E::Const(-c),
            E::Neg(a) => *a,
            other => E::Neg(Box::new(other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Var(usize),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(Token, usize)>,
    pos: usize,
    max_vars: Option<usize>,
}

fn parse_error(column: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::Parse { line: 1, column, message: message.into() }
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Token::Plus),
            '-' => Some(Token::Minus),
            '*' => Some(Token::Star),
            '/' => Some(Token::Slash),
            '^' => Some(Token::Caret),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, col));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| parse_error(col, format!("malformed number `{text}`")))?;
            out.push((Token::Number(value), col));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.strip_prefix('x') {
                Some(digits) if !digits.is_empty() && digits.chars().all(|d| d.is_ascii_digit()) => {
                    let idx: usize = digits.parse().map_err(|_| parse_error(col, format!("bad variable `{word}`")))?;
                    if idx == 0 {
                        return Err(parse_error(col, "coordinates are numbered from x1"));
                    }
                    Token::Var(idx - 1)
                }
                _ => Token::Ident(word),
            };
            out.push((tok, col));
            continue;
        }
        return Err(parse_error(col, format!("unexpected character `{c}`")));
    }
    out.push((Token::End, chars.len() + 1));
    Ok(out)
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, max_vars: Option<usize>) -> Self {
        Parser { src, tokens: Vec::new(), pos: 0, max_vars }
    }

    fn parse(mut self) -> Result<ScalarExpr> {
        self.tokens = tokenize(self.src)?;
        let e = self.expr()?;
        let (tok, col) = self.peek();
        if *tok != Token::End {
            return Err(parse_error(*col, format!("unexpected {tok:?} after expression")));
        }
        Ok(e)
    }

    fn peek(&self) -> &(Token, usize) {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> (Token, usize) {
        let t = self.tokens[self.pos].clone();
        if t.0 != Token::End {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().0 {
                Token::Plus => {
                    self.next();
                    lhs = E::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.next();
                    lhs = E::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().0 {
                Token::Star => {
                    self.next();
                    lhs = E::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.next();
                    lhs = E::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr> {
        if self.peek().0 == Token::Minus {
            self.next();
            return Ok(E::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<ScalarExpr> {
        let base = self.base()?;
        if self.peek().0 != Token::Caret {
            return Ok(base);
        }
        self.next();
        let negative = if self.peek().0 == Token::Minus {
            self.next();
            true
        } else {
            false
        };
        let (tok, col) = self.next();
        match tok {
            Token::Number(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let k = v as i32;
                Ok(E::Pow(Box::new(base), if negative { -k } else { k }))
            }
            other => Err(parse_error(col, format!("expected integer exponent, found {other:?}"))),
        }
    }

    fn base(&mut self) -> Result<ScalarExpr> {
        let (tok, col) = self.next();
        match tok {
            Token::Number(v) => Ok(E::Const(v)),
            Token::Var(i) => {
                if let Some(n) = self.max_vars {
                    if i >= n {
                        return Err(parse_error(col, format!("variable x{} exceeds chart dimension {n}", i + 1)));
                    }
                }
                Ok(E::Var(i))
            }
            Token::Ident(name) => {
                let func =
                    Func::from_name(&name).ok_or_else(|| parse_error(col, format!("unknown function `{name}`")))?;
                let (open, open_col) = self.next();
                if open != Token::LParen {
                    return Err(parse_error(open_col, format!("expected `(` after `{name}`")));
                }
                let arg = self.expr()?;
                self.expect_close(open_col)?;
                Ok(E::Func(func, Box::new(arg)))
            }
            Token::LParen => {
                let inner = self.expr()?;
                self.expect_close(col)?;
                Ok(inner)
            }
            Token::End => Err(parse_error(col, "unexpected end of expression")),
            other => Err(parse_error(col, format!("unexpected {other:?}"))),
        }
    }

    // Errors on a missing `)` point at the opening token.
    fn expect_close(&mut self, open_col: usize) -> Result<()> {
        let (tok, _) = self.next();
        if tok == Token::RParen {
            Ok(())
        } else {
            Err(parse_error(open_col, "unclosed parenthesis"))
        }
    }
}

/// Determinant of a small symbolic matrix by cofactor expansion.
pub fn symbolic_det(m: &[Vec<ScalarExpr>]) -> ScalarExpr {
    let n = m.len();
    match n {
        0 => E::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = E::zero();
            for col in 0..n {
                if m[0][col].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<ScalarExpr>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, e)| e.clone()).collect())
                    .collect();
                let term = m[0][col].clone() * symbolic_det(&minor);
                acc = if col % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Inverse of a small symbolic matrix via the adjugate.
pub fn symbolic_inverse(m: &[Vec<ScalarExpr>]) -> Vec<Vec<ScalarExpr>> {
    let n = m.len();
    let det = symbolic_det(m);
    let mut inv = vec![vec![E::zero(); n]; n];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            // inverse[r][c] = cofactor(c, r) / det
            let minor: Vec<Vec<ScalarExpr>> = m
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != c)
                .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != r).map(|(_, e)| e.clone()).collect())
                .collect();
            let cof = symbolic_det(&minor);
            let signed = if (r + c) % 2 == 0 { cof } else { -cof };
            *slot = signed / det.clone();
        }
    }
    inv
}
