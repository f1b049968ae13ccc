//! Scalar expressions of one real variable, used for user-defined multipliers
//! `V(ξ)` and deformation fields `G0(x)`.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?          right-associative, binds tighter than unary minus
//! atom   := number | constant | variable | func '(' expr ')' | '(' expr ')'
//! func   := exp | sin | cos
//! constant := e | pi | π
//! number := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ```
//!
//! So `-ξ^2` parses as `-(ξ^2)` and `2^3^2` as `2^(3^2)`. The variable names
//! accepted are fixed by the caller (`ξ`/`xi` for multipliers, `x` for fields).
//! Parsing is deterministic and fails on any trailing input.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use core::f64::consts::{E, PI};
use core::fmt;


#[allow(unused_imports)]
use num_traits::Float;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    /// Only produced by differentiation of variable exponents.
    Ln(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str, var_names: &[&str]) -> Result<Self> {
        let mut p = Parser { src, pos: 0, vars: var_names };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Pow(a, b) => pow(a.eval(t), b.eval(t)),
            Expr::Exp(a) => a.eval(t).exp(),
            Expr::Sin(a) => a.eval(t).sin(),
            Expr::Cos(a) => a.eval(t).cos(),
            Expr::Ln(a) => a.eval(t).ln(),
        }
    }

    pub fn depends_on_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Ln(a) => a.depends_on_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on_var() || b.depends_on_var()
            }
        }
    }

    /// Symbolic derivative with respect to the variable.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        let b = |e: Expr| Box::new(e);
        match self {
            Num(_) => Num(0.0),
            Var => Num(1.0),
            Neg(a) => mk_neg(a.derivative()),
            Add(x, y) => mk_add(x.derivative(), y.derivative()),
            Sub(x, y) => mk_sub(x.derivative(), y.derivative()),
            Mul(x, y) => mk_add(mk_mul(x.derivative(), (**y).clone()), mk_mul((**x).clone(), y.derivative())),
            Div(x, y) => mk_div(
                mk_sub(mk_mul(x.derivative(), (**y).clone()), mk_mul((**x).clone(), y.derivative())),
                Pow(y.clone(), b(Num(2.0))),
            ),
            Pow(base, ex) if !ex.depends_on_var() => mk_mul(
                mk_mul((**ex).clone(), Pow(base.clone(), b(Sub(ex.clone(), b(Num(1.0)))))),
                base.derivative(),
            ),
            Pow(base, ex) => mk_mul(
                self.clone(),
                mk_add(
                    mk_mul(ex.derivative(), Ln(base.clone())),
                    mk_div(mk_mul((**ex).clone(), base.derivative()), (**base).clone()),
                ),
            ),
            Exp(a) => mk_mul(self.clone(), a.derivative()),
            Sin(a) => mk_mul(Cos(a.clone()), a.derivative()),
            Cos(a) => mk_neg(mk_mul(Sin(a.clone()), a.derivative())),
            Ln(a) => mk_div(a.derivative(), (**a).clone()),
        }
    }
}

fn pow(base: f64, ex: f64) -> f64 {
    // integer exponents of negative bases are common (ξ^3)
    if ex.fract() == 0.0 && ex.abs() < 64.0 {
        base.powi(ex as i32)
    } else {
        base.powf(ex)
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

fn mk_neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        a => Expr::Neg(Box::new(a)),
    }
}

fn mk_add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn mk_sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        mk_neg(b)
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mk_mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn mk_div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        Expr::Num(0.0)
    } else {
        Expr::Div(Box::new(a), Box::new(b))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Expression { pos: self.pos, msg: msg.to_string() }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected character `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        let digits = |i: &mut usize| {
            let s = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i > s
        };
        let mut any = digits(&mut i);
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            any |= digits(&mut i);
        }
        if !any {
            return Err(self.err("malformed number"));
        }
        // exponent only if followed by digits; a bare `e` is Euler's constant
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) {
                i = j;
            }
        }
        let text = &self.src[start..i];
        self.pos = i;
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Expression { pos: start, msg: format!("malformed number `{text}`") })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        let len: usize = self
            .rest()
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '_')
            .map(char::len_utf8)
            .sum();
        let name: String = self.src[start..start + len].into();
        self.pos += len;
        let func = |p: &mut Self, f: fn(Box<Expr>) -> Expr| -> Result<Expr> {
            if !p.eat('(') {
                return Err(p.err("expected `(` after function name"));
            }
            let arg = p.expr()?;
            if !p.eat(')') {
                return Err(p.err("expected `)`"));
            }
            Ok(f(Box::new(arg)))
        };
        match name.as_str() {
            "exp" => func(self, Expr::Exp),
            "sin" => func(self, Expr::Sin),
            "cos" => func(self, Expr::Cos),
            "e" => Ok(Expr::Num(E)),
            "pi" | "π" => Ok(Expr::Num(PI)),
            n if self.vars.contains(&n) => Ok(Expr::Var),
            n => Err(Error::Expression { pos: start, msg: format!("unknown identifier `{n}`") }),
        }
    }
}
