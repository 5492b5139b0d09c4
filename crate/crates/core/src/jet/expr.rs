//! The expression mini-language: elementary closed forms over declared
//! variables, evaluated generically over any [`Scalar`].
//!
//! Precedence, tightest first: `^` (integer exponents only, chained left to
//! right), unary minus, `*` `/`, `+` `-`. Functions: exp, sin, cos, tan,
//! sqrt, atan (alias arctan). `pi` is a constant unless declared as a variable.

use std::fmt;

use thiserror::Error;

use super::scalar::{DomainError, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes 1 argument, got {found} (offset {offset})")]
    Arity { name: String, found: usize, offset: usize },
    #[error("invalid variable table: {0}")]
    Variables(String),
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::Variables(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{kind} in `{node}`")]
    Domain { kind: DomainError, node: String },
    #[error("expected {expected} values, got {found}")]
    Arity { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Atan,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "atan" | "arctan" => Func::Atan,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    kind: Kind,
    start: usize,
    end: usize,
}

/// A parsed expression with its variable table. Immutable and `Sync`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    src: String,
    vars: Vec<String>,
    root: Node,
}

impl Expression {
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expression, ParseError> {
        check_vars(vars)?;
        if src.trim().is_empty() {
            return Err(ParseError::Syntax { offset: 0, message: "empty expression".into() });
        }
        let tokens = lex(src)?;
        let mut p = Parser { src, tokens, pos: 0, vars };
        let root = p.expr()?;
        let tok = p.peek();
        if tok.tok != Tok::End {
            return Err(ParseError::Syntax { offset: tok.offset, message: "unexpected trailing input".into() });
        }
        Ok(Expression {
            src: src.to_string(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Evaluate with `vals[i]` bound to `vars()[i]`.
    pub fn eval<T: Scalar>(&self, vals: &[T]) -> Result<T, EvalError> {
        if vals.len() != self.vars.len() {
            return Err(EvalError::Arity { expected: self.vars.len(), found: vals.len() });
        }
        self.node(&self.root, vals)
    }

    /// Whether variable `i` occurs in the tree.
    pub fn uses(&self, i: usize) -> bool {
        fn walk(n: &Node, i: usize) -> bool {
            match &n.kind {
                Kind::Num(_) => false,
                Kind::Var(j) => *j == i,
                Kind::Neg(a) | Kind::Pow(a, _) | Kind::Call(_, a) => walk(a, i),
                Kind::Bin(_, a, b) => walk(a, i) || walk(b, i),
            }
        }
        walk(&self.root, i)
    }

    fn node<T: Scalar>(&self, n: &Node, vals: &[T]) -> Result<T, EvalError> {
        let dom = |kind: DomainError| EvalError::Domain { kind, node: self.src[n.start..n.end].to_string() };
        Ok(match &n.kind {
            Kind::Num(c) => T::cst(*c),
            Kind::Var(i) => vals[*i].clone(),
            Kind::Neg(a) => -self.node(a, vals)?,
            Kind::Bin(op, a, b) => {
                let (x, y) = (self.node(a, vals)?, self.node(b, vals)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x.try_div(&y).map_err(dom)?,
                }
            }
            Kind::Pow(a, k) => self.node(a, vals)?.powi(*k).map_err(dom)?,
            Kind::Call(f, a) => {
                let x = self.node(a, vals)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan().map_err(dom)?,
                    Func::Sqrt => x.sqrt().map_err(dom)?,
                    Func::Atan => x.atan(),
                }
            }
        })
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

fn check_vars(vars: &[&str]) -> Result<(), ParseError> {
    if vars.is_empty() {
        return Err(ParseError::Variables("no variables declared".into()));
    }
    for (i, v) in vars.iter().enumerate() {
        let mut bytes = v.bytes();
        let ok = matches!(bytes.next(), Some(b'a'..=b'z'))
            && bytes.all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
        if !ok {
            return Err(ParseError::Variables(format!("`{v}` does not match [a-z][a-z0-9]*")));
        }
        if Func::from_name(v).is_some() {
            return Err(ParseError::Variables(format!("`{v}` is a function name")));
        }
        if vars[..i].contains(v) {
            return Err(ParseError::Variables(format!("`{v}` declared twice")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
    end: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, offset: start, end: start + 1 });
            i += 1;
            continue;
        }
        if b.is_ascii_digit() || b == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push(Token { tok: Tok::Num(value), offset: start, end: i });
            continue;
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), offset: start, end: i });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{ch}`") });
    }
    out.push(Token { tok: Tok::End, offset: src.len(), end: src.len() });
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(ParseError::Syntax { offset: t.offset, message: format!("expected {what}") })
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek().tok {
            Tok::Minus => {
                let start = self.bump().offset;
                let a = self.unary()?;
                let end = a.end;
                Ok(Node { kind: Kind::Neg(Box::new(a)), start, end })
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let mut base = self.primary()?;
        while self.peek().tok == Tok::Caret {
            self.bump();
            let (k, end) = self.integer_exponent()?;
            let start = base.start;
            base = Node { kind: Kind::Pow(Box::new(base), k), start, end };
        }
        Ok(base)
    }

    /// `^` accepts a signed integer literal, optionally parenthesized.
    fn integer_exponent(&mut self) -> Result<(i32, usize), ParseError> {
        let paren = self.peek().tok == Tok::LParen;
        if paren {
            self.bump();
        }
        let mut sign = 1.0;
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                sign = -1.0;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        let t = self.bump();
        let k = match t.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => (sign * v) as i32,
            _ => {
                return Err(ParseError::Syntax { offset: t.offset, message: "exponent must be an integer literal".into() })
            }
        };
        let mut end = t.end;
        if paren {
            end = self.expect(Tok::RParen, "`)`")?.end;
        }
        Ok((k, end))
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Node { kind: Kind::Num(v), start: t.offset, end: t.end }),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Node { kind: inner.kind, start: t.offset, end: close.end })
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    return self.call(name, t.offset);
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node { kind: Kind::Var(i), start: t.offset, end: t.end });
                }
                if name == "pi" {
                    return Ok(Node { kind: Kind::Num(std::f64::consts::PI), start: t.offset, end: t.end });
                }
                Err(ParseError::UnknownIdentifier { name, offset: t.offset })
            }
            Tok::End => Err(ParseError::Syntax { offset: t.offset, message: "unexpected end of input".into() }),
            _ => Err(ParseError::Syntax {
                offset: t.offset,
                message: format!("unexpected `{}`", &self.src[t.offset..t.end]),
            }),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier { name: name.clone(), offset })?;
        self.bump(); // `(`
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            args.push(self.expr()?);
            while self.peek().tok == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
        }
        let close = self.expect(Tok::RParen, "`)`")?;
        if args.len() != 1 {
            return Err(ParseError::Arity { name, found: args.len(), offset });
        }
        let arg = args.pop().unwrap();
        Ok(Node { kind: Kind::Call(func, Box::new(arg)), start: offset, end: close.end })
    }
}

fn bin(op: BinOp, a: Node, b: Node) -> Node {
    let (start, end) = (a.start, b.end);
    Node { kind: Kind::Bin(op, Box::new(a), Box::new(b)), start, end }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, vars: &[&str], vals: &[f64]) -> f64 {
        Expression::parse(src, vars).unwrap().eval(vals).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("-z0^2", &["z0"], &[3.0]), -9.0);
        assert_eq!(ev("1 + 2*3^2", &["z0"], &[0.0]), 19.0);
        assert_eq!(ev("8/2/2", &["z0"], &[0.0]), 2.0);
        assert_eq!(ev("2-3-4", &["z0"], &[0.0]), -5.0);
        assert_eq!(ev("z0^-1", &["z0"], &[4.0]), 0.25);
        assert_eq!(ev("z0^(-2)", &["z0"], &[2.0]), 0.25);
        assert_eq!(ev("(z0+1)^2^3", &["z0"], &[1.0]), 64.0);
        assert_eq!(ev("2.5e-1*z0", &["z0"], &[4.0]), 1.0);
    }

    #[test]
    fn functions_and_pi() {
        let v = ev("sin(pi/2) + arctan(1)*4/pi + sqrt(z0)", &["z0"], &[9.0]);
        assert!((v - 5.0).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = Expression::parse("z0 +", &["z0"]).unwrap_err();
        assert_eq!(e.offset(), Some(4));
        let e = Expression::parse("z0 * q", &["z0"]).unwrap_err();
        assert!(matches!(e, ParseError::UnknownIdentifier { ref name, offset: 5 } if name == "q"));
        let e = Expression::parse("sin(z0, z0)", &["z0"]).unwrap_err();
        assert!(matches!(e, ParseError::Arity { found: 2, .. }));
        let e = Expression::parse("foo(z0)", &["z0"]).unwrap_err();
        assert!(matches!(e, ParseError::UnknownIdentifier { .. }));
        let e = Expression::parse("z0^1.5", &["z0"]).unwrap_err();
        assert_eq!(e.offset(), Some(3));
        let e = Expression::parse("(z0", &["z0"]).unwrap_err();
        assert_eq!(e.offset(), Some(3));
        assert!(Expression::parse("z0", &["z0", "z0"]).is_err());
        assert!(Expression::parse("z0", &[]).is_err());
        assert!(Expression::parse("Z0", &["Z0"]).is_err());
    }

    #[test]
    fn domain_errors_name_the_node() {
        let e = Expression::parse("1 + z0/(z1 - 1)", &["z0", "z1"]).unwrap();
        let err = e.eval(&[1.0, 1.0]).unwrap_err();
        assert_eq!(err, EvalError::Domain { kind: DomainError::DivisionByZero, node: "z0/(z1 - 1)".into() });
        let e = Expression::parse("sqrt(z0)", &["z0"]).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(EvalError::Domain { kind: DomainError::SqrtOfNegative, .. })));
    }
}
