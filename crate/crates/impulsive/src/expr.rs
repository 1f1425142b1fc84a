//! A deliberately small arithmetic expression grammar over configuration
//! coordinates, used by inline system descriptions: +, -, *, /, ^ (right
//! associative), parentheses, unary minus, and the functions sin, cos, sqrt.
//! Variables are resolved against a chart's coordinate names at parse time,
//! so evaluation is a pure walk with no lookups.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::ConfigChart;

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Sqrt(Box<Node>),
}

impl Node {
    fn eval(&self, q: &DVector<f64>) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => q[*i],
            Node::Neg(a) => -a.eval(q),
            Node::Add(a, b) => a.eval(q) + b.eval(q),
            Node::Sub(a, b) => a.eval(q) - b.eval(q),
            Node::Mul(a, b) => a.eval(q) * b.eval(q),
            Node::Div(a, b) => a.eval(q) / b.eval(q),
            Node::Pow(a, b) => a.eval(q).powf(b.eval(q)),
            Node::Sin(a) => a.eval(q).sin(),
            Node::Cos(a) => a.eval(q).cos(),
            Node::Sqrt(a) => a.eval(q).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn bad(source: &str, what: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("expression {source:?}: {what}"))
}

fn tokenize(source: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let bytes = source.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '(' => {
                tokens.push(Token::Open);
                i += 1;
            }
            ')' => {
                tokens.push(Token::Close);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // Exponent part, accepting a signed integer after e/E.
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| bad(source, format!("malformed number {text:?}")))?;
                tokens.push(Token::Num(value));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] as char == '_')
                {
                    i += 1;
                }
                tokens.push(Token::Ident(source[start..i].to_string()));
            }
            other => return Err(bad(source, format!("unexpected character {other:?}"))),
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    source: &'a str,
    chart: &'a ConfigChart,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.next() {
            Some(Token::Close) => Ok(()),
            _ => Err(bad(self.source, "missing closing parenthesis")),
        }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut node = self.product()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Plus => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.product()?));
                }
                Token::Minus => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.product()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn product(&mut self) -> Result<Node> {
        let mut node = self.unary()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Star => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.pos += 1;
                    node = Node::Div(Box::new(node), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            // Unary minus binds below exponentiation: -x^2 is -(x^2).
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            // Right associative: x^y^z parses as x^(y^z); the exponent may
            // itself carry a unary minus, as in x^-2.
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::Open) => {
                let inner = self.sum()?;
                self.expect_close()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::Open) {
                    self.pos += 1;
                    let arg = Box::new(self.sum()?);
                    self.expect_close()?;
                    match name.as_str() {
                        "sin" => Ok(Node::Sin(arg)),
                        "cos" => Ok(Node::Cos(arg)),
                        "sqrt" => Ok(Node::Sqrt(arg)),
                        other => Err(bad(
                            self.source,
                            format!("unknown function {other:?} (have sin, cos, sqrt)"),
                        )),
                    }
                } else {
                    match self.chart.index_of(&name) {
                        Some(i) => Ok(Node::Var(i)),
                        None => Err(bad(
                            self.source,
                            format!(
                                "unknown coordinate {name:?} (chart has {})",
                                self.chart.names().join(", ")
                            ),
                        )),
                    }
                }
            }
            _ => Err(bad(self.source, "expected a number, coordinate, or '('")),
        }
    }
}

/// A parsed expression over a chart's coordinates.
#[derive(Clone, Debug)]
pub struct Expr {
    node: Node,
    source: String,
    dim: usize,
}

impl Expr {
    /// Parses source against the chart's coordinate names.
    pub fn parse(source: &str, chart: &ConfigChart) -> Result<Expr> {
        let tokens = tokenize(source)?;
        if tokens.is_empty() {
            return Err(bad(source, "empty expression"));
        }
        let mut parser = Parser {
            source,
            chart,
            tokens,
            pos: 0,
        };
        let node = parser.sum()?;
        if parser.pos != parser.tokens.len() {
            return Err(bad(source, "trailing input after the expression"));
        }
        Ok(Expr {
            node,
            source: source.to_string(),
            dim: chart.dim(),
        })
    }

    /// Evaluates at a configuration (length must match the chart).
    pub fn eval(&self, q: &DVector<f64>) -> f64 {
        debug_assert_eq!(q.len(), self.dim, "configuration dimension");
        self.node.eval(q)
    }

    /// The original source text.
    pub fn source(&self) -> &str {
        &self.source
    }
}
