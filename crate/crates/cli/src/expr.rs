//! Model expressions such as `a * exp(b * x) + c`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     = product (("+" | "-") product)*
//! product = unary (("*" | "/") unary)*
//! unary   = "-" unary | power
//! power   = atom (("^" | "**") unary)?
//! atom    = number | "x" | name | func "(" sum ")" | "(" sum ")"
//! func    = exp | log | log10 | sqrt
//! ```
//!
//! Every name other than `x` and the functions is a parameter. Derivatives
//! are taken symbolically; where a symbolic derivative evaluates to a
//! non-finite number at a finite point, a central difference is used.

use std::fmt;

use mnr_core::PointwiseModel;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    X,
    Param(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Exp(Box<Node>),
    Log(Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Param(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at character {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

fn num(v: f64) -> Node {
    Node::Num(v)
}

fn add(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x + y),
        (Node::Num(0.0), e) | (e, Node::Num(0.0)) => e,
        (a, b) => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x - y),
        (e, Node::Num(0.0)) => e,
        (Node::Num(0.0), e) => neg(e),
        (a, b) => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x * y),
        (Node::Num(0.0), _) | (_, Node::Num(0.0)) => num(0.0),
        (Node::Num(1.0), e) | (e, Node::Num(1.0)) => e,
        (a, b) => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) if y != 0.0 => num(x / y),
        (Node::Num(0.0), _) => num(0.0),
        (e, Node::Num(1.0)) => e,
        (a, b) => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Num(x) => num(-x),
        Node::Neg(e) => *e,
        e => Node::Neg(Box::new(e)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Num(x), Node::Num(y)) => num(x.powf(y)),
        (_, Node::Num(0.0)) => num(1.0),
        (e, Node::Num(1.0)) => e,
        (a, b) => Node::Pow(Box::new(a), Box::new(b)),
    }
}

fn exp(a: Node) -> Node {
    match a {
        Node::Num(x) => num(x.exp()),
        e => Node::Exp(Box::new(e)),
    }
}

fn log(a: Node) -> Node {
    match a {
        Node::Num(x) => num(x.ln()),
        e => Node::Log(Box::new(e)),
    }
}

impl Node {
    pub fn eval(&self, x: f64, theta: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Param(i) => theta[*i],
            Node::Neg(a) => -a.eval(x, theta),
            Node::Add(a, b) => a.eval(x, theta) + b.eval(x, theta),
            Node::Sub(a, b) => a.eval(x, theta) - b.eval(x, theta),
            Node::Mul(a, b) => a.eval(x, theta) * b.eval(x, theta),
            Node::Div(a, b) => a.eval(x, theta) / b.eval(x, theta),
            Node::Pow(a, b) => {
                let base = a.eval(x, theta);
                match **b {
                    Node::Num(e) if e == e.round() && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(x, theta)),
                }
            }
            Node::Exp(a) => a.eval(x, theta).exp(),
            Node::Log(a) => a.eval(x, theta).ln(),
        }
    }

    fn depends_on(&self, v: Var) -> bool {
        match self {
            Node::Num(_) => false,
            Node::X => v == Var::X,
            Node::Param(i) => v == Var::Param(*i),
            Node::Neg(a) | Node::Exp(a) | Node::Log(a) => a.depends_on(v),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    pub fn diff(&self, v: Var) -> Node {
        if !self.depends_on(v) {
            return num(0.0);
        }
        match self {
            Node::Num(_) => num(0.0),
            Node::X | Node::Param(_) => num(1.0),
            Node::Neg(a) => neg(a.diff(v)),
            Node::Add(a, b) => add(a.diff(v), b.diff(v)),
            Node::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Node::Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Node::Div(a, b) => {
                let (a, b) = (&**a, &**b);
                div(
                    sub(mul(a.diff(v), b.clone()), mul(a.clone(), b.diff(v))),
                    pow(b.clone(), num(2.0)),
                )
            }
            Node::Pow(a, b) => {
                let (a, b) = (&**a, &**b);
                if !b.depends_on(v) {
                    // d a^b = b a^(b-1) da
                    mul(mul(b.clone(), pow(a.clone(), sub(b.clone(), num(1.0)))), a.diff(v))
                } else {
                    // d a^b = a^b (db log a + b da / a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.diff(v), log(a.clone())),
                            div(mul(b.clone(), a.diff(v)), a.clone()),
                        ),
                    )
                }
            }
            Node::Exp(a) => mul(self.clone(), a.diff(v)),
            Node::Log(a) => div(a.diff(v), (**a).clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Name(String),
    Op(char),
    Pow,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
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
            let v = text.parse::<f64>().map_err(|_| ParseError {
                position: start,
                message: format!("bad number '{text}'"),
            })?;
            out.push((start, Token::Num(v)));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Token::Name(chars[start..i].iter().collect())));
            continue;
        }
        let tok = match c {
            '*' if chars.get(i + 1) == Some(&'*') => {
                i += 1;
                Token::Pow
            }
            '^' => Token::Pow,
            '+' | '-' | '*' | '/' => Token::Op(c),
            '(' => Token::LParen,
            ')' => Token::RParen,
            _ => {
                return Err(ParseError {
                    position: start,
                    message: format!("unexpected character '{c}'"),
                })
            }
        };
        i += 1;
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    params: &'a mut Vec<String>,
    fixed: bool,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.here(),
            message: message.into(),
        })
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if c == '+' { add(lhs, rhs) } else { sub(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' { mul(lhs, rhs) } else { div(lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(neg(self.unary()?));
        }
        if let Some(Token::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some(Token::Pow) = self.peek() {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(pow(base, e));
        }
        Ok(base)
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail("expected ')'"),
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(num(v))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect_close()?;
                Ok(e)
            }
            Some(Token::Name(name)) => {
                self.pos += 1;
                if let Some(Token::LParen) = self.peek() {
                    self.pos += 1;
                    let arg = self.sum()?;
                    self.expect_close()?;
                    return match name.as_str() {
                        "exp" => Ok(exp(arg)),
                        "log" | "ln" => Ok(log(arg)),
                        "log10" => Ok(div(log(arg), num(std::f64::consts::LN_10))),
                        "sqrt" => Ok(pow(arg, num(0.5))),
                        _ => self.fail(format!("unknown function '{name}'")),
                    };
                }
                if name == "x" {
                    return Ok(Node::X);
                }
                if matches!(name.as_str(), "exp" | "log" | "ln" | "log10" | "sqrt") {
                    return self.fail(format!("function '{name}' needs an argument"));
                }
                match self.params.iter().position(|p| *p == name) {
                    Some(i) => Ok(Node::Param(i)),
                    None if self.fixed => self.fail(format!("'{name}' is not a declared parameter")),
                    None => {
                        self.params.push(name);
                        Ok(Node::Param(self.params.len() - 1))
                    }
                }
            }
            Some(t) => self.fail(format!("unexpected {t:?}")),
            None => self.fail("unexpected end of expression"),
        }
    }
}

/// Parse `src`. With `declared` the parameters must come from that list, in
/// that order; otherwise they are numbered by first appearance.
pub fn parse(src: &str, declared: Option<&[String]>) -> Result<(Node, Vec<String>), ParseError> {
    let tokens = tokenize(src)?;
    let mut params: Vec<String> = declared.map(|d| d.to_vec()).unwrap_or_default();
    let mut p = Parser {
        tokens,
        pos: 0,
        end: src.chars().count(),
        params: &mut params,
        fixed: declared.is_some(),
    };
    let node = p.sum()?;
    if p.pos != p.tokens.len() {
        return p.fail("trailing input");
    }
    Ok((node, params))
}

/// A pointwise model built from an expression and its derivatives.
#[derive(Debug, Clone)]
pub struct ExprModel {
    source: String,
    names: Vec<String>,
    f: Node,
    df: Node,
    d2f: Node,
    df_dtheta: Vec<Node>,
    d2f_dxdtheta: Vec<Node>,
}

impl ExprModel {
    pub fn new(src: &str, declared: Option<&[String]>) -> Result<Self, ParseError> {
        let (f, names) = parse(src, declared)?;
        if !f.depends_on(Var::X) {
            return Err(ParseError {
                position: 0,
                message: "expression does not depend on x".into(),
            });
        }
        let df = f.diff(Var::X);
        let d2f = df.diff(Var::X);
        let df_dtheta = (0..names.len()).map(|j| f.diff(Var::Param(j))).collect();
        let d2f_dxdtheta = (0..names.len()).map(|j| df.diff(Var::Param(j))).collect();
        Ok(Self {
            source: src.to_string(),
            names,
            f,
            df,
            d2f,
            df_dtheta,
            d2f_dxdtheta,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn finite_or(v: f64, fallback: impl FnOnce() -> f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        fallback()
    }
}

fn central(f: impl Fn(f64) -> f64, at: f64) -> f64 {
    let h = 1e-6 * (1.0 + at.abs());
    (f(at + h) - f(at - h)) / (2.0 * h)
}

fn with_param(theta: &[f64], j: usize, v: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[j] = v;
    t
}

impl PointwiseModel for ExprModel {
    fn n_params(&self) -> usize {
        self.names.len()
    }

    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn value(&self, x: f64, theta: &[f64]) -> f64 {
        self.f.eval(x, theta)
    }

    fn slope(&self, x: f64, theta: &[f64]) -> f64 {
        finite_or(self.df.eval(x, theta), || central(|u| self.f.eval(u, theta), x))
    }

    fn curvature(&self, x: f64, theta: &[f64]) -> f64 {
        finite_or(self.d2f.eval(x, theta), || central(|u| self.slope(u, theta), x))
    }

    fn value_grad(&self, x: f64, theta: &[f64], out: &mut [f64]) {
        for (j, (o, d)) in out.iter_mut().zip(&self.df_dtheta).enumerate() {
            *o = finite_or(d.eval(x, theta), || {
                central(|t| self.f.eval(x, &with_param(theta, j, t)), theta[j])
            });
        }
    }

    fn slope_grad(&self, x: f64, theta: &[f64], out: &mut [f64]) {
        for (j, (o, d)) in out.iter_mut().zip(&self.d2f_dxdtheta).enumerate() {
            *o = finite_or(d.eval(x, theta), || {
                central(|t| self.slope(x, &with_param(theta, j, t)), theta[j])
            });
        }
    }
}
