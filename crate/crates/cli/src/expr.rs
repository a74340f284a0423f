//! Boundary expressions in `t`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 't' | 'inf' | '-inf' | func '(' expr ')' | '(' expr ')' | '-' base
//! func   := exp | log | sqrt | sin | cos | abs
//! ```
//!
//! Unary minus binds tighter than `^`, so `-t^2` is `(-t)^2`. Evaluation is
//! plain IEEE arithmetic; `exp(-1/t)` is `0` at `t = 0`.

use std::fmt;
use std::sync::Arc;

use bcp_core::{GeneralBoundary, Side};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at offset {offset}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Abs => x.abs(),
        }
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

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::Neg(e) => -e.eval(t),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(t), b.eval(t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(t)),
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::T => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on_t(),
            Expr::Bin(_, a, b) => a.depends_on_t() || b.depends_on_t(),
        }
    }
}

/// A parsed boundary or coefficient expression with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryExpr {
    source: String,
    tree: Arc<Expr>,
}

impl fmt::Display for BoundaryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl BoundaryExpr {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.tree.eval(t)
    }

    /// The value if the expression does not involve `t`.
    pub fn constant(&self) -> Option<f64> {
        (!self.tree.depends_on_t()).then(|| self.tree.eval(0.0))
    }

    /// `Some(±∞)` for `inf` / `-inf` style constants.
    pub fn infinite(&self) -> Option<f64> {
        self.constant().filter(|v| v.is_infinite())
    }

    /// An evaluator closure sharing the parsed tree.
    pub fn function(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        let tree = self.tree.clone();
        Arc::new(move |t| tree.eval(t))
    }

    /// A library boundary on `[0, horizon]`; `inf` on the matching side gives an infinite boundary.
    pub fn to_boundary(&self, side: Side, horizon: f64) -> bcp_core::Result<GeneralBoundary> {
        let outward = match side {
            Side::Upper => f64::INFINITY,
            Side::Lower => f64::NEG_INFINITY,
        };
        match self.infinite() {
            Some(v) if v == outward => GeneralBoundary::infinite(side, horizon),
            Some(v) => Err(bcp_core::BcpError::InvalidBoundaries(format!(
                "{} boundary '{}' is {v}; the band would be empty",
                side_name(side),
                self.source
            ))),
            None => GeneralBoundary::from_fn(side, horizon, self.function()),
        }
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Upper => "upper",
        Side::Lower => "lower",
    }
}

/// Parses an expression in `t`.
pub fn parse_boundary(text: &str) -> Result<BoundaryExpr, ParseError> {
    let mut p = Parser { src: text, pos: 0 };
    let tree = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error(format!("unexpected '{}'", p.peek_char().unwrap_or(' '))));
    }
    Ok(BoundaryExpr {
        source: text.to_string(),
        tree: Arc::new(tree),
    })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    /// Next non-space character, without consuming it.
    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_char()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat('^') {
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                match name {
                    "t" => Ok(Expr::T),
                    "inf" => Ok(Expr::Num(f64::INFINITY)),
                    _ => {
                        let Some(func) = Func::from_name(name) else {
                            return Err(ParseError {
                                offset: start,
                                message: format!("unknown identifier '{name}'"),
                            });
                        };
                        if !self.eat('(') {
                            return Err(self.error(format!("expected '(' after {name}")));
                        }
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let from = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos > from
        };
        let mut pos = self.pos;
        let int = digits(&mut pos);
        let mut frac = false;
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            frac = digits(&mut pos);
        }
        if !int && !frac {
            return Err(self.error("malformed number"));
        }
        if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
            let mut q = pos + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                pos = q;
            }
        }
        self.pos = pos;
        self.src[start..pos]
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError {
                offset: start,
                message: "malformed number".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(s: &str, t: f64) -> f64 {
        parse_boundary(s).unwrap().eval(t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1+2*3", 0.0), 7.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("8/4/2", 0.0), 1.0);
        assert_eq!(eval("1-2-3", 0.0), -4.0);
        assert_eq!(eval("-t^2", 3.0), 9.0);
        assert_eq!(eval("2*-t", 3.0), -6.0);
        assert_eq!(eval(" ( 1 + t ) * 2 ", 1.5), 5.0);
    }

    #[test]
    fn numbers() {
        assert_eq!(eval("1.5e2", 0.0), 150.0);
        assert_eq!(eval(".25", 0.0), 0.25);
        assert_eq!(eval("3.", 0.0), 3.0);
        assert_eq!(eval("2E-1", 0.0), 0.2);
    }

    #[test]
    fn functions_and_literals() {
        assert_eq!(eval("sqrt(1+t)", 0.0), 1.0);
        assert_eq!(eval("abs(-2)+exp(0)+log(1)+sin(0)+cos(0)", 0.0), 4.0);
        assert_eq!(parse_boundary("inf").unwrap().infinite(), Some(f64::INFINITY));
        assert_eq!(parse_boundary("-inf").unwrap().infinite(), Some(f64::NEG_INFINITY));
        assert_eq!(parse_boundary("2*t").unwrap().constant(), None);
    }

    #[test]
    fn daniels_boundary_starts_at_one_half() {
        let b = parse_boundary("0.5 - t*log(0.25+0.25*sqrt(1+8*exp(-1/t)))").unwrap();
        assert_eq!(b.eval(0.0), 0.5);
        let direct = |t: f64| 0.5 - t * (0.25 + 0.25 * (1.0 + 8.0 * (-1.0 / t).exp()).sqrt()).ln();
        for k in 1..=10 {
            let t = k as f64 / 10.0;
            assert_eq!(b.eval(t), direct(t));
        }
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_boundary("1+*2").unwrap_err();
        assert_eq!(e.offset, 2);
        let e = parse_boundary("2*foo(t)").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(e.message.contains("unknown identifier"));
        assert_eq!(parse_boundary("(1+t").unwrap_err().offset, 4);
        assert_eq!(parse_boundary("1 2").unwrap_err().offset, 2);
        assert_eq!(parse_boundary("").unwrap_err().offset, 0);
        assert!(parse_boundary("sqrt 2").is_err());
    }

    #[test]
    fn boundary_conversion() {
        let up = parse_boundary("inf").unwrap().to_boundary(Side::Upper, 1.0).unwrap();
        assert!(!up.is_finite());
        assert!(parse_boundary("-inf").unwrap().to_boundary(Side::Upper, 1.0).is_err());
        let b = parse_boundary("1+t").unwrap().to_boundary(Side::Upper, 2.0).unwrap();
        assert_eq!(b.eval(2.0).unwrap(), 3.0);
    }
}
