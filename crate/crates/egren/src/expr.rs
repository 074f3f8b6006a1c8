//! Kernel DSL: expression trees over coordinates `x1..xd` with symbolic
//! differentiation.
//!
//! The grammar accepts arithmetic (`+ - * /`), `pow(e, c)` with a constant
//! exponent, `abs`, `log`, `exp`, `sqrt`, `sign`, numeric literals and the
//! variables `x1`..`xd`. The extra variable `eps` is reserved for regulated
//! kernels; it is bound at evaluation time.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Index of the regulator pseudo-variable in the evaluation slot table.
pub const EPS_SLOT: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate variable `x{i+1}`, or the regulator when the index is `EPS_SLOT`.
    Var(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    /// Base raised to a constant real exponent.
    Pow(Arc<Expr>, f64),
    Abs(Arc<Expr>),
    Log(Arc<Expr>),
    Exp(Arc<Expr>),
    Sign(Arc<Expr>),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("syntax error at offset {offset} (line {line}, column {column}): {message}")]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    /// Evaluate at a point; `eps` fills the regulator slot.
    pub fn eval_with_eps(&self, x: &[f64], eps: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => {
                if *i == EPS_SLOT {
                    eps
                } else {
                    x[*i]
                }
            }
            Expr::Add(a, b) => a.eval_with_eps(x, eps) + b.eval_with_eps(x, eps),
            Expr::Sub(a, b) => a.eval_with_eps(x, eps) - b.eval_with_eps(x, eps),
            Expr::Mul(a, b) => a.eval_with_eps(x, eps) * b.eval_with_eps(x, eps),
            Expr::Div(a, b) => a.eval_with_eps(x, eps) / b.eval_with_eps(x, eps),
            Expr::Neg(a) => -a.eval_with_eps(x, eps),
            Expr::Pow(a, p) => a.eval_with_eps(x, eps).powf(*p),
            Expr::Abs(a) => a.eval_with_eps(x, eps).abs(),
            Expr::Log(a) => a.eval_with_eps(x, eps).ln(),
            Expr::Exp(a) => a.eval_with_eps(x, eps).exp(),
            Expr::Sign(a) => {
                let v = a.eval_with_eps(x, eps);
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with_eps(x, 0.0)
    }

    /// Symbolic partial derivative w.r.t. coordinate `i`, valid away from the
    /// singular locus of the expression (`sign` and `abs` kinks excluded).
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(i), b.diff(i)),
            Expr::Sub(a, b) => sub(a.diff(i), b.diff(i)),
            Expr::Mul(a, b) => add(
                mul(a.diff(i), (**b).clone()),
                mul((**a).clone(), b.diff(i)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.diff(i), (**b).clone()),
                    mul((**a).clone(), b.diff(i)),
                ),
                Expr::Pow(b.clone(), 2.0),
            ),
            Expr::Neg(a) => neg(a.diff(i)),
            Expr::Pow(a, p) => mul(
                mul(Expr::Const(*p), Expr::Pow(a.clone(), p - 1.0)),
                a.diff(i),
            ),
            Expr::Abs(a) => mul(Expr::Sign(a.clone()), a.diff(i)),
            Expr::Log(a) => div(a.diff(i), (**a).clone()),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.diff(i)),
            // zero almost everywhere
            Expr::Sign(_) => Expr::Const(0.0),
        }
    }

    /// Repeated differentiation by a multi-index.
    pub fn diff_multi(&self, alpha: &[usize]) -> Expr {
        let mut e = self.clone();
        for (i, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                e = e.diff(i);
            }
        }
        e
    }

    /// Shift every variable index by `offset` (tensor-product relabelling).
    pub fn shift_vars(&self, offset: usize) -> Expr {
        let map = |a: &Arc<Expr>| Arc::new(a.shift_vars(offset));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => {
                if *i == EPS_SLOT {
                    Expr::Var(EPS_SLOT)
                } else {
                    Expr::Var(*i + offset)
                }
            }
            Expr::Add(a, b) => Expr::Add(map(a), map(b)),
            Expr::Sub(a, b) => Expr::Sub(map(a), map(b)),
            Expr::Mul(a, b) => Expr::Mul(map(a), map(b)),
            Expr::Div(a, b) => Expr::Div(map(a), map(b)),
            Expr::Neg(a) => Expr::Neg(map(a)),
            Expr::Pow(a, p) => Expr::Pow(map(a), *p),
            Expr::Abs(a) => Expr::Abs(map(a)),
            Expr::Log(a) => Expr::Log(map(a)),
            Expr::Exp(a) => Expr::Exp(map(a)),
            Expr::Sign(a) => Expr::Sign(map(a)),
        }
    }
    /// Substitute `map[i]` for each variable `x{i+1}` (linear change of
    /// coordinates, fiber restriction, ...). The regulator slot is kept.
    pub fn substitute(&self, map: &[Expr]) -> Expr {
        let go = |a: &Arc<Expr>| Arc::new(a.substitute(map));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => {
                if *i == EPS_SLOT {
                    Expr::Var(EPS_SLOT)
                } else {
                    map[*i].clone()
                }
            }
            Expr::Add(a, b) => Expr::Add(go(a), go(b)),
            Expr::Sub(a, b) => Expr::Sub(go(a), go(b)),
            Expr::Mul(a, b) => Expr::Mul(go(a), go(b)),
            Expr::Div(a, b) => Expr::Div(go(a), go(b)),
            Expr::Neg(a) => Expr::Neg(go(a)),
            Expr::Pow(a, p) => Expr::Pow(go(a), *p),
            Expr::Abs(a) => Expr::Abs(go(a)),
            Expr::Log(a) => Expr::Log(go(a)),
            Expr::Exp(a) => Expr::Exp(go(a)),
            Expr::Sign(a) => Expr::Sign(go(a)),
        }
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

pub fn add(a: Expr, b: Expr) -> Expr {
    if is_const(&a, 0.0) {
        return b;
    }
    if is_const(&b, 0.0) {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x + y);
    }
    Expr::Add(Arc::new(a), Arc::new(b))
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    if is_const(&b, 0.0) {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x - y);
    }
    Expr::Sub(Arc::new(a), Arc::new(b))
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        return Expr::Const(0.0);
    }
    if is_const(&a, 1.0) {
        return b;
    }
    if is_const(&b, 1.0) {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x * y);
    }
    Expr::Mul(Arc::new(a), Arc::new(b))
}

pub fn div(a: Expr, b: Expr) -> Expr {
    if is_const(&a, 0.0) {
        return Expr::Const(0.0);
    }
    if is_const(&b, 1.0) {
        return a;
    }
    Expr::Div(Arc::new(a), Arc::new(b))
}

pub fn neg(a: Expr) -> Expr {
    if let Expr::Const(x) = &a {
        return Expr::Const(-x);
    }
    Expr::Neg(Arc::new(a))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => {
                if *i == EPS_SLOT {
                    write!(f, "eps")
                } else {
                    write!(f, "x{}", i + 1)
                }
            }
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, p) => write!(f, "pow({a}, {p})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sign(a) => write!(f, "sign({a})"),
        }
    }
}

/// Parse the kernel DSL. `dim` bounds the admissible coordinate index.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        dim,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> ParseError {
        let mut line = 1;
        let mut column = 1;
        for &b in &self.src[..self.pos.min(self.src.len())] {
            if b == b'\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        }
        ParseError {
            offset: self.pos,
            line,
            column,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = add(acc, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = mul(acc, self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = div(acc, self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(neg(self.factor()?));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.number()?;
            return Ok(Expr::Pow(Arc::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number().map(Expr::Const),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.error(&format!("unexpected character '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit() || *b == b'.' || *b == b'e' || *b == b'E')
        {
            // allow a sign right after an exponent marker
            if matches!(self.src[self.pos], b'e' | b'E')
                && matches!(self.src.get(self.pos + 1), Some(b'+') | Some(b'-'))
            {
                self.pos += 1;
            }
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error("malformed number"))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
            if idx == 0 || idx > self.dim {
                self.pos = start;
                return Err(self.error(&format!("variable {name} out of range for dimension {}", self.dim)));
            }
            return Ok(Expr::Var(idx - 1));
        }
        if name == "eps" {
            return Ok(Expr::Var(EPS_SLOT));
        }
        match name {
            "pow" => {
                self.expect(b'(')?;
                let base = self.expr()?;
                self.expect(b',')?;
                let e = self.number()?;
                self.expect(b')')?;
                Ok(Expr::Pow(Arc::new(base), e))
            }
            "abs" | "log" | "exp" | "sqrt" | "sign" => {
                self.expect(b'(')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(match name {
                    "abs" => Expr::Abs(Arc::new(inner)),
                    "log" => Expr::Log(Arc::new(inner)),
                    "exp" => Expr::Exp(Arc::new(inner)),
                    "sqrt" => Expr::Pow(Arc::new(inner), 0.5),
                    _ => Expr::Sign(Arc::new(inner)),
                })
            }
            _ => {
                self.pos = start;
                Err(self.error(&format!("unknown identifier '{name}'")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_power_law() {
        let e = parse("pow(abs(x1), -0.5)", 1).unwrap();
        assert!((e.eval(&[4.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parses_two_variable_kernel() {
        let e = parse("log(abs(x1 - x2))", 2).unwrap();
        assert!((e.eval(&[3.0, 1.0]) - 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn reports_syntax_error_with_position() {
        let err = parse("pow(x1,", 1).unwrap_err();
        assert!(err.offset >= 7);
        assert_eq!(err.line, 1);
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert!(parse("x3", 2).is_err());
    }

    #[test]
    fn derivative_of_inverse_abs_is_signed_inverse_square() {
        let e = parse("pow(abs(x1), -1)", 1).unwrap();
        let de = e.diff(0);
        // d/dx |x|^{-1} = -sign(x) |x|^{-2}
        for &x in &[0.5f64, -0.25, 2.0] {
            let expect = -x.signum() * x.abs().powi(-2);
            assert!((de.eval(&[x]) - expect).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn caret_power_and_eps() {
        let e = parse("x1^2 + eps", 1).unwrap();
        assert_eq!(e.eval_with_eps(&[3.0], 0.5), 9.5);
    }
}
