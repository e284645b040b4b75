//! A tiny expression language for gauge functions χ(r, θ).
//!
//! Grammar:
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'r' | 'theta' | 'pi'
//!         | ('sin' | 'cos' | 'exp') '(' expr ')'
//!         | 'pow' '(' expr ',' expr ')'
//!         | '(' expr ')'
//! ```
//! Gradients are exact, obtained by forward-mode differentiation.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    R,
    Theta,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
}

/// Value together with its (∂_r, ∂_θ) derivatives.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    dr: f64,
    dt: f64,
}

impl Dual {
    fn constant(v: f64) -> Self {
        Dual { v, dr: 0.0, dt: 0.0 }
    }
    fn chain(self, v: f64, slope: f64) -> Self {
        Dual { v, dr: self.dr * slope, dt: self.dt * slope }
    }
}

impl Node {
    fn eval(&self, r: f64, theta: f64) -> Dual {
        match self {
            Node::Num(x) => Dual::constant(*x),
            Node::R => Dual { v: r, dr: 1.0, dt: 0.0 },
            Node::Theta => Dual { v: theta, dr: 0.0, dt: 1.0 },
            Node::Neg(a) => {
                let a = a.eval(r, theta);
                Dual { v: -a.v, dr: -a.dr, dt: -a.dt }
            }
            Node::Add(a, b) => {
                let (a, b) = (a.eval(r, theta), b.eval(r, theta));
                Dual { v: a.v + b.v, dr: a.dr + b.dr, dt: a.dt + b.dt }
            }
            Node::Sub(a, b) => {
                let (a, b) = (a.eval(r, theta), b.eval(r, theta));
                Dual { v: a.v - b.v, dr: a.dr - b.dr, dt: a.dt - b.dt }
            }
            Node::Mul(a, b) => {
                let (a, b) = (a.eval(r, theta), b.eval(r, theta));
                Dual { v: a.v * b.v, dr: a.dr * b.v + a.v * b.dr, dt: a.dt * b.v + a.v * b.dt }
            }
            Node::Div(a, b) => {
                let (a, b) = (a.eval(r, theta), b.eval(r, theta));
                let inv = 1.0 / b.v;
                Dual {
                    v: a.v * inv,
                    dr: (a.dr * b.v - a.v * b.dr) * inv * inv,
                    dt: (a.dt * b.v - a.v * b.dt) * inv * inv,
                }
            }
            Node::Pow(a, b) => {
                let (a, b) = (a.eval(r, theta), b.eval(r, theta));
                let v = a.v.powf(b.v);
                if b.dr == 0.0 && b.dt == 0.0 {
                    a.chain(v, b.v * a.v.powf(b.v - 1.0))
                } else {
                    let ln = a.v.ln();
                    Dual {
                        v,
                        dr: v * (b.dr * ln + b.v * a.dr / a.v),
                        dt: v * (b.dt * ln + b.v * a.dt / a.v),
                    }
                }
            }
            Node::Sin(a) => {
                let a = a.eval(r, theta);
                a.chain(a.v.sin(), a.v.cos())
            }
            Node::Cos(a) => {
                let a = a.eval(r, theta);
                a.chain(a.v.cos(), -a.v.sin())
            }
            Node::Exp(a) => {
                let a = a.eval(r, theta);
                let e = a.v.exp();
                a.chain(e, e)
            }
        }
    }
}

/// A parsed gauge-function expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Input(format!("unexpected trailing input in expression {source:?}")));
        }
        Ok(Expr { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn value(&self, r: f64, theta: f64) -> f64 {
        self.root.eval(r, theta).v
    }

    /// (∂/∂r, ∂/∂θ)
    pub fn gradient(&self, r: f64, theta: f64) -> (f64, f64) {
        let d = self.root.eval(r, theta);
        (d.dr, d.dt)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // optional exponent
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("bad number {text:?} in expression")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Input(format!("unexpected character {c:?} in expression")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Input(format!("expected {c:?} in expression")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "r" => Ok(Node::R),
                    "theta" => Ok(Node::Theta),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "sin" | "cos" | "exp" => {
                        self.expect('(')?;
                        let a = Box::new(self.expr()?);
                        self.expect(')')?;
                        Ok(match name.as_str() {
                            "sin" => Node::Sin(a),
                            "cos" => Node::Cos(a),
                            _ => Node::Exp(a),
                        })
                    }
                    "pow" => {
                        self.expect('(')?;
                        let a = self.expr()?;
                        self.expect(',')?;
                        let b = self.expr()?;
                        self.expect(')')?;
                        Ok(Node::Pow(Box::new(a), Box::new(b)))
                    }
                    other => Err(Error::Input(format!("unknown identifier {other:?} in expression"))),
                }
            }
            Some(t) => Err(Error::Input(format!("unexpected token {t:?} in expression"))),
            None => Err(Error::Input("expression ended unexpectedly".into())),
        }
    }
}
