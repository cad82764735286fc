//! Coefficient expressions: literals, `x1..x8`, `t`, `pi`, `e`, the four
//! arithmetic operators, `^`, unary minus and `sqrt exp log sin cos`.
//!
//! Precedence from tightest: `^`, unary `-`, `* /`, `+ -`. All binary
//! operators associate to the left, so `2^3^2 = 64`. The exponent of `^` may
//! carry its own leading minus (`x^-2`).

use crate::{Error, Result};
use std::fmt;

pub const MAX_VARS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `x{k+1}`.
    Var(usize),
    T,
    Pi,
    E,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser { src: text, toks: lex(text)?, pos: 0 };
        let e = p.sum()?;
        match p.peek() {
            Tok::End => Ok(e),
            _ => Err(p.error("unexpected token")),
        }
    }

    /// Evaluates at coordinates `x` (so `x1 = x[0]`) and time `t`.
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => *x.get(*k).ok_or_else(|| Error::Domain(format!("x{} is undefined in dimension {}", k + 1, x.len())))?,
            Expr::T => t,
            Expr::Pi => std::f64::consts::PI,
            Expr::E => std::f64::consts::E,
            Expr::Neg(a) => -a.eval(x, t)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, t)?, b.eval(x, t)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::Domain(format!("division of {a} by zero")));
                        }
                        a / b
                    }
                    BinOp::Pow => pow(a, b)?,
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(x, t)?;
                match f {
                    Func::Sqrt if a < 0.0 => return Err(Error::Domain(format!("sqrt of negative {a}"))),
                    Func::Log if a <= 0.0 => return Err(Error::Domain(format!("log of nonpositive {a}"))),
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("non-finite value in `{self}`")))
        }
    }

    /// Largest `k` with `x{k}` referenced, 0 if none.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Var(k) => k + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
            _ => 0,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn pow(a: f64, b: f64) -> Result<f64> {
    if a < 0.0 && b.fract() != 0.0 {
        return Err(Error::Domain(format!("{a} raised to non-integer power {b}")));
    }
    if a == 0.0 && b < 0.0 {
        return Err(Error::Domain(format!("zero raised to negative power {b}")));
    }
    // Small integer exponents multiply, so `x^2` matches `x * x` bit for bit.
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        Ok(a.powi(b as i32))
    } else {
        Ok(a.powf(b))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(k) => write!(f, "x{}", k + 1),
            Expr::T => write!(f, "t"),
            Expr::Pi => write!(f, "pi"),
            Expr::E => write!(f, "e"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                wrap(f, a, a.precedence() < p)?;
                write!(f, "{sym}")?;
                let right_paren = if *op == BinOp::Pow { b.precedence() < 5 } else { b.precedence() <= p };
                wrap(f, b, right_paren)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Parse { offset: start, message: format!("malformed number `{text}`") })?;
            if !v.is_finite() {
                return Err(Error::Parse { offset: start, message: format!("number `{text}` overflows") });
            }
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    return Err(Error::Parse { offset: start, message: format!("unexpected character `{ch}`") });
                }
            };
            i += 1;
            out.push((tok, start));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> Error {
        let found = match self.peek() {
            Tok::End => "end of input".to_string(),
            _ => format!("`{}`", self.src[self.offset()..].chars().next().unwrap_or(' ')),
        };
        Error::Parse { offset: self.offset(), message: format!("{message}, found {found}") }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
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
        let mut lhs = self.primary()?;
        while *self.peek() == Tok::Op('^') {
            self.bump();
            lhs = Expr::Bin(BinOp::Pow, Box::new(lhs), Box::new(self.exponent()?));
        }
        Ok(lhs)
    }

    fn exponent(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::lookup(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.error(&format!("expected `(` after `{name}`")));
                    }
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "t" => Ok(Expr::T),
                    "pi" => Ok(Expr::Pi),
                    "e" => Ok(Expr::E),
                    _ => variable(&name).ok_or(Error::UnknownIdentifier { offset: at, name }),
                }
            }
            _ => Err(self.error("expected a number, variable, function or `(`")),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if *self.peek() != Tok::RParen {
            return Err(self.error("expected `)`"));
        }
        self.bump();
        Ok(())
    }
}

fn variable(name: &str) -> Option<Expr> {
    let k: usize = name.strip_prefix('x')?.parse().ok()?;
    if (1..=MAX_VARS).contains(&k) && !name[1..].starts_with('0') {
        Some(Expr::Var(k - 1))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> f64 {
        Expr::parse(s).unwrap().eval(&[2.0, 3.0], 0.5).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 - 2 - 3"), -4.0);
        assert_eq!(ev("8 / 2 / 2"), 2.0);
        assert_eq!(ev("2^3^2"), 64.0);
        assert_eq!(ev("-x1^2"), -4.0);
        assert_eq!(ev("(-x1)^2"), 4.0);
        assert_eq!(ev("x1^-1"), 0.5);
        assert_eq!(ev("2*-x2"), -6.0);
        assert_eq!(ev("1 + 2*3^2"), 19.0);
        assert_eq!(ev("t"), 0.5);
    }

    #[test]
    fn display_is_minimal() {
        for (src, shown) in [
            ("(x1 + x2) * x3", "(x1 + x2)*x3"),
            ("x1 - (x2 - x3)", "x1 - (x2 - x3)"),
            ("(x1 - x2) - x3", "x1 - x2 - x3"),
            ("(2^3)^2", "2^3^2"),
            ("2^(3^2)", "2^(3^2)"),
            ("-(-x1)", "--x1"),
            ("x1^-2", "x1^(-2)"),
        ] {
            assert_eq!(Expr::parse(src).unwrap().to_string(), shown);
        }
    }

    #[test]
    fn identifiers() {
        assert!(matches!(Expr::parse("x9"), Err(Error::UnknownIdentifier { offset: 0, .. })));
        assert!(matches!(Expr::parse("1 + x0"), Err(Error::UnknownIdentifier { offset: 4, .. })));
        assert!(matches!(Expr::parse("tan(x1)"), Err(Error::UnknownIdentifier { offset: 0, .. })));
        assert!(matches!(Expr::parse("sin x1"), Err(Error::Parse { offset: 4, .. })));
        assert_eq!(Expr::parse("x8 + x02 * 0").map(|e| e.arity()).ok(), None);
        assert_eq!(Expr::parse("x8 * x3").unwrap().arity(), 8);
    }
}
