//! Small expression language for boundary, initial and forcing data.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! or      := and ( ('|' | '||') and )*
//! and     := cmp ( ('&' | '&&') cmp )*
//! cmp     := sum ( ('<' | '>' | '<=' | '>=' | '==' | '!=') sum )?
//! sum     := product ( ('+' | '-') product )*
//! product := unary ( ('*' | '/') unary )*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ( '^' unary )?
//! atom    := number | name | name '(' args ')' | '(' or ')'
//! ```
//!
//! Components of vector-valued expressions are separated by `;`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Function {
    fn from_name(name: &str) -> Option<(Function, usize)> {
        Some(match name {
            "sin" => (Function::Sin, 1),
            "cos" => (Function::Cos, 1),
            "tan" => (Function::Tan, 1),
            "exp" => (Function::Exp, 1),
            "ln" | "log" => (Function::Ln, 1),
            "sqrt" => (Function::Sqrt, 1),
            "abs" => (Function::Abs, 1),
            "min" => (Function::Min, 2),
            "max" => (Function::Max, 2),
            _ => return None,
        })
    }
}

/// Expression tree over the variables `x`, `y`, `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    /// 0 = x, 1 = y, 2 = t.
    Variable(usize),
    Neg(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Function, Vec<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
}

impl Node {
    pub fn eval(&self, vars: &[f64; 3]) -> Result<f64> {
        Ok(match self {
            Node::Number(v) => *v,
            Node::Variable(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars)?,
            Node::Binary(op, a, b) => {
                let a = a.eval(vars)?;
                // short-circuit logical operators
                match op {
                    BinaryOp::And if a == 0.0 => return Ok(0.0),
                    BinaryOp::Or if a != 0.0 => return Ok(1.0),
                    _ => {}
                }
                let b = b.eval(vars)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(Error::Domain(format!("division by zero ({a} / 0)")));
                        }
                        a / b
                    }
                    BinaryOp::Pow => {
                        let v = a.powf(b);
                        if v.is_nan() {
                            return Err(Error::Domain(format!("{a} ^ {b} is undefined")));
                        }
                        v
                    }
                    BinaryOp::Lt => bool_value(a < b),
                    BinaryOp::Gt => bool_value(a > b),
                    BinaryOp::Le => bool_value(a <= b),
                    BinaryOp::Ge => bool_value(a >= b),
                    BinaryOp::Eq => bool_value(a == b),
                    BinaryOp::Ne => bool_value(a != b),
                    BinaryOp::And | BinaryOp::Or => bool_value(b != 0.0),
                }
            }
            Node::Call(f, args) => {
                let a = args[0].eval(vars)?;
                match f {
                    Function::Sin => a.sin(),
                    Function::Cos => a.cos(),
                    Function::Tan => a.tan(),
                    Function::Exp => a.exp(),
                    Function::Ln => {
                        if a <= 0.0 {
                            return Err(Error::Domain(format!("ln of nonpositive value {a}")));
                        }
                        a.ln()
                    }
                    Function::Sqrt => {
                        if a < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative value {a}")));
                        }
                        a.sqrt()
                    }
                    Function::Abs => a.abs(),
                    Function::Min => a.min(args[1].eval(vars)?),
                    Function::Max => a.max(args[1].eval(vars)?),
                }
            }
            Node::If(c, a, b) => {
                if c.eval(vars)? != 0.0 {
                    a.eval(vars)?
                } else {
                    b.eval(vars)?
                }
            }
        })
    }
}

fn bool_value(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Name(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    /// column of `src[0]` in the full text, 1-based
    offset: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, at: usize, message: impl Into<String>) -> Error {
        Error::Expression { column: self.offset + at, message: message.into() }
    }

    fn tokens(mut self) -> Result<Vec<(Token, usize)>> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        loop {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            if self.pos >= bytes.len() {
                out.push((Token::End, start));
                return Ok(out);
            }
            let c = bytes[self.pos];
            let tok = if c.is_ascii_digit() || c == b'.' {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut e = end + 1;
                    if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                        e += 1;
                    }
                    if e < bytes.len() && bytes[e].is_ascii_digit() {
                        while e < bytes.len() && bytes[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let text = &self.src[self.pos..end];
                self.pos = end;
                Token::Number(text.parse().map_err(|_| self.err(start, format!("bad number '{text}'")))?)
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                let name = self.src[self.pos..end].to_string();
                self.pos = end;
                Token::Name(name)
            } else {
                let two = self.src.get(self.pos..self.pos + 2).unwrap_or("");
                let op2 = ["<=", ">=", "==", "!=", "&&", "||"].into_iter().find(|o| *o == two);
                if let Some(op) = op2 {
                    self.pos += 2;
                    Token::Op(op)
                } else {
                    self.pos += 1;
                    match c {
                        b'(' => Token::LParen,
                        b')' => Token::RParen,
                        b',' => Token::Comma,
                        b'+' => Token::Op("+"),
                        b'-' => Token::Op("-"),
                        b'*' => Token::Op("*"),
                        b'/' => Token::Op("/"),
                        b'^' => Token::Op("^"),
                        b'<' => Token::Op("<"),
                        b'>' => Token::Op(">"),
                        b'&' => Token::Op("&"),
                        b'|' => Token::Op("|"),
                        _ => return Err(self.err(start, format!("unexpected character '{}'", c as char))),
                    }
                }
            };
            out.push((tok, start));
        }
    }
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    offset: usize,
    constants: &'a HashMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn column(&self) -> usize {
        self.offset + self.tokens[self.pos].1
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Expression { column: self.column(), message: message.into() }
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, ops: &[&str]) -> Option<&'static str> {
        if let Token::Op(op) = *self.peek() {
            if ops.contains(&op) {
                self.bump();
                return Some(op);
            }
        }
        None
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn or(&mut self) -> Result<Node> {
        let mut lhs = self.and()?;
        while self.eat_op(&["|", "||"]).is_some() {
            lhs = Node::Binary(BinaryOp::Or, Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Node> {
        let mut lhs = self.cmp()?;
        while self.eat_op(&["&", "&&"]).is_some() {
            lhs = Node::Binary(BinaryOp::And, Box::new(lhs), Box::new(self.cmp()?));
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<Node> {
        let lhs = self.sum()?;
        let op = match self.eat_op(&["<", ">", "<=", ">=", "==", "!="]) {
            Some("<") => BinaryOp::Lt,
            Some(">") => BinaryOp::Gt,
            Some("<=") => BinaryOp::Le,
            Some(">=") => BinaryOp::Ge,
            Some("==") => BinaryOp::Eq,
            Some("!=") => BinaryOp::Ne,
            _ => return Ok(lhs),
        };
        Ok(Node::Binary(op, Box::new(lhs), Box::new(self.sum()?)))
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(op) = self.eat_op(&["+", "-"]) {
            let op = if op == "+" { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&["*", "/"]) {
            let op = if op == "*" { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.eat_op(&["-", "+"]) {
            Some("-") => Ok(Node::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat_op(&["^"]).is_some() {
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let column = self.column();
        match self.bump() {
            Token::Number(v) => Ok(Node::Number(v)),
            Token::LParen => {
                let inner = self.or()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Token::Name(name) => {
                if *self.peek() == Token::LParen {
                    self.bump();
                    let mut args = vec![self.or()?];
                    while *self.peek() == Token::Comma {
                        self.bump();
                        args.push(self.or()?);
                    }
                    self.expect(Token::RParen, "')' after arguments")?;
                    let arity_err = |n: usize| Error::Expression {
                        column,
                        message: format!("'{name}' takes {n} argument(s), got {}", args.len()),
                    };
                    if name == "if" {
                        if args.len() != 3 {
                            return Err(arity_err(3));
                        }
                        let mut it = args.into_iter();
                        let (c, a, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                        return Ok(Node::If(Box::new(c), Box::new(a), Box::new(b)));
                    }
                    let (f, n) = Function::from_name(&name).ok_or_else(|| Error::Expression {
                        column,
                        message: format!("unknown function '{name}'"),
                    })?;
                    if args.len() != n {
                        return Err(arity_err(n));
                    }
                    return Ok(Node::Call(f, args));
                }
                match name.as_str() {
                    "x" => Ok(Node::Variable(0)),
                    "y" => Ok(Node::Variable(1)),
                    "t" => Ok(Node::Variable(2)),
                    _ => {
                        if let Some(&v) = self.constants.get(&name) {
                            Ok(Node::Number(v))
                        } else if name == "pi" || name == "Pi" {
                            Ok(Node::Number(std::f64::consts::PI))
                        } else {
                            Err(Error::Expression { column, message: format!("unknown name '{name}'") })
                        }
                    }
                }
            }
            Token::End => Err(Error::Expression { column, message: "unexpected end of expression".into() }),
            tok => Err(Error::Expression { column, message: format!("unexpected token {tok:?}") }),
        }
    }
}

/// A parsed, possibly vector-valued expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    text: String,
    components: Vec<Node>,
}

impl Expression {
    pub fn parse(text: &str, expected_components: usize) -> Result<Self> {
        Self::parse_with_constants(text, expected_components, &HashMap::new())
    }

    pub fn parse_with_constants(
        text: &str,
        expected_components: usize,
        constants: &HashMap<String, f64>,
    ) -> Result<Self> {
        let mut components = Vec::new();
        let mut offset = 1;
        for part in text.split(';') {
            let tokens = Lexer { src: part, pos: 0, offset }.tokens()?;
            let mut p = Parser { tokens, pos: 0, offset, constants };
            let node = p.or()?;
            if *p.peek() != Token::End {
                return Err(p.err("unexpected trailing input"));
            }
            components.push(node);
            offset += part.len() + 1;
        }
        if components.len() != expected_components {
            return Err(Error::ArityMismatch { expected: expected_components, found: components.len() });
        }
        Ok(Expression { text: text.to_string(), components })
    }

    /// Expression with every component identically zero.
    pub fn zero(components: usize) -> Self {
        Expression { text: vec!["0"; components].join("; "), components: vec![Node::Number(0.0); components] }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Node] {
        &self.components
    }

    pub fn evaluate(&self, x: f64, y: f64, t: f64) -> Result<Vec<f64>> {
        let vars = [x, y, t];
        self.components.iter().map(|c| c.eval(&vars)).collect()
    }

    pub fn evaluate_component(&self, component: usize, x: f64, y: f64, t: f64) -> Result<f64> {
        self.components[component].eval(&[x, y, t])
    }

    /// True when every component is a literal zero.
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| *c == Node::Number(0.0))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub fn parse_expression(text: &str, expected_components: usize) -> Result<Expression> {
    Expression::parse(text, expected_components)
}

pub fn evaluate(expr: &Expression, x: f64, y: f64, t: f64) -> Result<Vec<f64>> {
    expr.evaluate(x, y, t)
}

/// Parses `name=value, name=value` constant lists; empty input gives no constants.
pub fn parse_constants(text: &str) -> Result<HashMap<String, f64>, String> {
    let mut out = HashMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| format!("constant '{item}' is not of the form name=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("constant '{}' has non-numeric value '{}'", name.trim(), value.trim()))?;
        out.insert(name.trim().to_string(), value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn component_counts() {
        assert_eq!(parse_expression("if(y>.99, 1, 0); 0; 0", 3).unwrap().n_components(), 3);
        let z = parse_expression("0; 0", 2).unwrap();
        assert_eq!(z.evaluate(0.3, 0.1, 5.0).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            parse_expression("0; 0", 3),
            Err(Error::ArityMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn known_values() {
        let e = parse_expression("sin(pi*x)*sin(pi*y); 0", 2).unwrap();
        let v = e.evaluate(0.5, 0.5, 0.0).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1] == 0.0);
        let e = parse_expression("if(x>0, 1, -1)", 1).unwrap();
        assert_eq!(e.evaluate(2.0, 0.0, 0.0).unwrap(), vec![1.0]);
        assert_eq!(e.evaluate(-1.0, 0.0, 0.0).unwrap(), vec![-1.0]);
        let e = parse_expression("-2^2 + 2^3^2 - 2^-1", 1).unwrap();
        assert_eq!(e.evaluate(0.0, 0.0, 0.0).unwrap(), vec![-4.0 + 512.0 - 0.5]);
        let e = parse_expression("1 + 2 * 3 > 6 & t <= 1e-1", 1).unwrap();
        assert_eq!(e.evaluate(0.0, 0.0, 0.1).unwrap(), vec![1.0]);
        assert_eq!(e.evaluate(0.0, 0.0, 0.2).unwrap(), vec![0.0]);
    }

    #[test]
    fn lazy_branches_and_domain_errors() {
        let e = parse_expression("if(x>0, 1/x, 0)", 1).unwrap();
        assert_eq!(e.evaluate(0.0, 0.0, 0.0).unwrap(), vec![0.0]);
        assert!(matches!(parse_expression("ln(x)", 1).unwrap().evaluate(0.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(parse_expression("sqrt(x)", 1).unwrap().evaluate(-1.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(parse_expression("1/(x-x)", 1).unwrap().evaluate(1.0, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn parse_errors_carry_columns() {
        match parse_expression("0; 1 + * 2", 2) {
            Err(Error::Expression { column, .. }) => assert_eq!(column, 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_expression("foo(1)", 1), Err(Error::Expression { column: 1, .. })));
        assert!(matches!(parse_expression("(1", 1), Err(Error::Expression { .. })));
        assert!(matches!(parse_expression("z", 1), Err(Error::Expression { .. })));
        assert!(matches!(parse_expression("if(1, 2)", 1), Err(Error::Expression { .. })));
        assert!(matches!(parse_expression("1 $ 2", 1), Err(Error::Expression { column: 3, .. })));
    }

    #[test]
    fn user_constants() {
        let c = parse_constants("a=2, b = 0.5").unwrap();
        let e = Expression::parse_with_constants("a*x + b", 1, &c).unwrap();
        assert_eq!(e.evaluate(3.0, 0.0, 0.0).unwrap(), vec![6.5]);
        assert!(parse_constants("").unwrap().is_empty());
        assert!(parse_constants("a").is_err());
    }

    // Independent oracle: random trees rendered to text, evaluated directly.
    #[derive(Debug, Clone)]
    enum T {
        Num(f64),
        Var(usize),
        Neg(Box<T>),
        Bin(char, Box<T>, Box<T>),
        Fun(&'static str, Box<T>),
        If(Box<T>, Box<T>, Box<T>),
    }

    fn prec(op: char) -> u8 {
        match op {
            '<' | '>' => 1,
            '+' | '-' => 2,
            '*' | '/' => 3,
            _ => 5,
        }
    }

    fn render(t: &T, parens: bool) -> String {
        let wrap = |s: String, need: bool| if need || parens { format!("({s})") } else { s };
        match t {
            T::Num(v) => format!("{v}"),
            T::Var(i) => ["x", "y", "t"][*i].to_string(),
            T::Neg(a) => {
                let inner = match **a {
                    T::Bin(op, ..) if prec(op) < 5 => format!("({})", render(a, parens)),
                    T::Neg(_) => format!("({})", render(a, parens)),
                    _ => render(a, parens),
                };
                format!("-{inner}")
            }
            T::Bin(op, a, b) => {
                let p = prec(*op);
                let need_l = match **a {
                    T::Bin(o, ..) => prec(o) < p || (p == 5 && prec(o) == 5) || (p == 1 && prec(o) == 1),
                    T::Neg(_) => p >= 5,
                    _ => false,
                };
                let need_r = match **b {
                    T::Bin(o, ..) => prec(o) <= p && p != 5 || (p == 5 && prec(o) < 5),
                    T::Neg(_) => false,
                    _ => false,
                };
                let l = wrap(render(a, parens), need_l);
                let r = wrap(render(b, parens), need_r);
                format!("{l} {op} {r}")
            }
            T::Fun(name, a) => format!("{name}({})", render(a, parens)),
            T::If(c, a, b) => format!("if({}, {}, {})", render(c, parens), render(a, parens), render(b, parens)),
        }
    }

    fn oracle(t: &T, v: &[f64; 3]) -> Option<f64> {
        Some(match t {
            T::Num(x) => *x,
            T::Var(i) => v[*i],
            T::Neg(a) => -oracle(a, v)?,
            T::Bin(op, a, b) => {
                let (a, b) = (oracle(a, v)?, oracle(b, v)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' if b == 0.0 => return None,
                    '/' => a / b,
                    '^' => {
                        let r = a.powf(b);
                        if r.is_nan() {
                            return None;
                        }
                        r
                    }
                    '<' => (a < b) as u8 as f64,
                    _ => (a > b) as u8 as f64,
                }
            }
            T::Fun(name, a) => {
                let a = oracle(a, v)?;
                match *name {
                    "sin" => a.sin(),
                    "cos" => a.cos(),
                    "exp" => a.exp(),
                    "abs" => a.abs(),
                    "sqrt" if a < 0.0 => return None,
                    "sqrt" => a.sqrt(),
                    "ln" if a <= 0.0 => return None,
                    _ => a.ln(),
                }
            }
            T::If(c, a, b) => {
                if oracle(c, v)? != 0.0 {
                    oracle(a, v)?
                } else {
                    oracle(b, v)?
                }
            }
        })
    }

    fn random_tree(rng: &mut impl Rng, depth: usize) -> T {
        if depth == 0 || rng.random::<f64>() < 0.25 {
            return if rng.random() {
                T::Num((rng.random_range(0..400) as f64) / 8.0)
            } else {
                T::Var(rng.random_range(0..3))
            };
        }
        match rng.random_range(0..10) {
            0 => T::Neg(Box::new(random_tree(rng, depth - 1))),
            1 => T::Fun(
                ["sin", "cos", "exp", "abs", "sqrt", "ln"][rng.random_range(0..6)],
                Box::new(random_tree(rng, depth - 1)),
            ),
            2 => T::If(
                Box::new(random_tree(rng, depth - 1)),
                Box::new(random_tree(rng, depth - 1)),
                Box::new(random_tree(rng, depth - 1)),
            ),
            _ => T::Bin(
                ['+', '-', '*', '/', '^', '<', '>'][rng.random_range(0..7)],
                Box::new(random_tree(rng, depth - 1)),
                Box::new(random_tree(rng, depth - 1)),
            ),
        }
    }

    /// Compares the parser/evaluator with the oracle on `n` random trees.
    fn check_against_oracle(seed: u64, n: usize) -> usize {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut compared = 0;
        for _ in 0..n {
            let tree = random_tree(&mut rng, 4);
            let text = render(&tree, rng.random::<f64>() < 0.3);
            let expr = parse_expression(&text, 1).unwrap_or_else(|e| panic!("{text}: {e}"));
            for _ in 0..3 {
                let v = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0)];
                let got = expr.evaluate(v[0], v[1], v[2]).ok().map(|r| r[0]);
                let want = oracle(&tree, &v);
                match (got, want) {
                    (Some(g), Some(w)) => {
                        let same = g == w || (g - w).abs() <= 1e-12 * w.abs().max(1.0) || (g.is_nan() && w.is_nan());
                        assert!(same, "{text} at {v:?}: {g} vs {w}");
                    }
                    (None, None) => {}
                    (g, w) => panic!("{text} at {v:?}: evaluator {g:?}, oracle {w:?}"),
                }
                compared += 1;
            }
        }
        compared
    }

    #[test]
    fn matches_tree_walk_oracle() {
        assert_eq!(check_against_oracle(11, 200), 600);
    }

    proptest! {
        #[test]
        fn parsing_is_deterministic(seed in 0u64..10_000) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let text = render(&random_tree(&mut rng, 4), false);
            prop_assert_eq!(parse_expression(&text, 1).unwrap(), parse_expression(&text, 1).unwrap());
        }
    }
}
