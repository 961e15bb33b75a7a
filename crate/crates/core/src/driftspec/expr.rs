//! Drift expressions over `t`, `x`, `y`: tokenizer, recursive-descent
//! parser, evaluator and printer.
//!
//! Grammar (unary minus binds looser than `^`, so `-2^2 = -4`, while an
//! exponent may itself start with a minus, as in `2^-1`):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```

use crate::{Error, Result};
use std::fmt;

/// Maximum nesting depth of an expression tree.
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn apply(self, v: f64) -> Result<f64> {
        let out = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => {
                if v <= 0.0 {
                    return Err(Error::Evaluation(format!("log of non-positive argument {v}")));
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(Error::Evaluation(format!("sqrt of negative argument {v}")));
                }
                v.sqrt()
            }
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
        };
        if !out.is_finite() {
            return Err(Error::Evaluation(format!("{}({v}) is not finite", self.name())));
        }
        Ok(out)
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        match self {
            Node::Num(v) => Ok(*v),
            Node::Var(Var::T) => Ok(t),
            Node::Var(Var::X) => Ok(x),
            Node::Var(Var::Y) => Ok(y),
            Node::Neg(a) => Ok(-a.eval(t, x, y)?),
            Node::Call(f, a) => f.apply(a.eval(t, x, y)?),
            Node::Bin(op, a, b) => {
                let l = a.eval(t, x, y)?;
                let r = b.eval(t, x, y)?;
                let out = match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(Error::Evaluation(format!("division of {l} by zero")));
                        }
                        l / r
                    }
                    BinOp::Pow => l.powf(r),
                };
                if !out.is_finite() {
                    return Err(Error::Evaluation(format!("{l} {} {r} is not finite", op_symbol(*op))));
                }
                Ok(out)
            }
        }
    }

    /// Whether the subtree mentions the variable.
    pub fn mentions(&self, v: Var) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Call(_, a) => a.mentions(v),
            Node::Bin(_, a, b) => a.mentions(v) || b.mentions(v),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Num(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.depth(),
            Node::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

fn op_symbol(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Pow => "^",
    }
}

impl fmt::Display for Node {
    /// Fully parenthesised form that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Var(Var::T) => f.write_str("t"),
            Node::Var(Var::X) => f.write_str("x"),
            Node::Var(Var::Y) => f.write_str("y"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op_symbol(*op)),
        }
    }
}

/// A parsed drift `h(t, x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftExpr {
    root: Node,
}

impl DriftExpr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        self.root.eval(t, x, y)
    }

    pub fn mentions_state(&self) -> bool {
        self.root.mentions(Var::X) || self.root.mentions(Var::Y)
    }
}

impl fmt::Display for DriftExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for DriftExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<DriftExpr> {
        parse_drift(s)
    }
}

/// Parse a drift expression.
pub fn parse_drift(source: &str) -> Result<DriftExpr> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
        end: source.len(),
    };
    if p.peek().is_none() {
        return Err(Error::Syntax {
            offset: 0,
            expected: "an expression".into(),
            found: "end of input".into(),
        });
    }
    let root = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(Error::Syntax {
            offset: tok.offset,
            expected: "an operator or end of input".into(),
            found: tok.kind.describe(),
        });
    }
    Ok(DriftExpr { root })
}

/// Evaluate `expr` at `(t, x, y)`; domain violations are errors.
pub fn eval_drift(expr: &DriftExpr, t: f64, x: f64, y: f64) -> Result<f64> {
    expr.eval(t, x, y)
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
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' | '\u{2212}' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            it.next();
            out.push(Token { kind, offset: i });
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut end = i;
            let bytes = src.as_bytes();
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &src[i..end];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: i,
                expected: "a number".into(),
                found: format!("`{text}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Syntax {
                    offset: i,
                    expected: "a finite number".into(),
                    found: format!("`{text}`"),
                });
            }
            while it.peek().is_some_and(|&(j, _)| j < end) {
                it.next();
            }
            out.push(Token {
                kind: Tok::Num(v),
                offset: i,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if d.is_alphanumeric() || d == '_' {
                    end = j + d.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            out.push(Token {
                kind: Tok::Ident(src[i..end].to_string()),
                offset: i,
            });
            continue;
        }
        return Err(Error::Syntax {
            offset: i,
            expected: "a number, identifier, operator or parenthesis".into(),
            found: format!("'{c}'"),
        });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
    end: usize,
}

const PRIMARY_START: &str = "a number, identifier, '(' or '-'";

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next_kind(&self) -> Option<&Tok> {
        self.peek().map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn found(&self) -> String {
        self.peek().map_or("end of input".into(), |t| t.kind.describe())
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Error::Syntax {
                offset: self.offset(),
                expected: format!("nesting depth at most {MAX_DEPTH}"),
                found: "deeper nesting".into(),
            });
        }
        Ok(())
    }

    fn bin(&mut self, op: BinOp, a: Node, b: Node) -> Result<Node> {
        let node = Node::Bin(op, Box::new(a), Box::new(b));
        if node.depth() > MAX_DEPTH {
            return Err(Error::Syntax {
                offset: self.offset(),
                expected: format!("nesting depth at most {MAX_DEPTH}"),
                found: "deeper nesting".into(),
            });
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.next_kind() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = self.bin(op, lhs, rhs)?;
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.next_kind() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = self.bin(op, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if matches!(self.next_kind(), Some(Tok::Minus)) {
            self.pos += 1;
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if matches!(self.next_kind(), Some(Tok::Caret)) {
            self.pos += 1;
            self.enter()?;
            let exp = self.unary()?;
            self.depth -= 1;
            return self.bin(BinOp::Pow, base, exp);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Syntax {
                offset: self.end,
                expected: PRIMARY_START.into(),
                found: "end of input".into(),
            });
        };
        match tok.kind {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "t" => return Ok(Node::Var(Var::T)),
                    "x" => return Ok(Node::Var(Var::X)),
                    "y" => return Ok(Node::Var(Var::Y)),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(Error::UnknownIdentifier {
                        name,
                        offset: tok.offset,
                    });
                };
                if !matches!(self.next_kind(), Some(Tok::LParen)) {
                    return Err(Error::Syntax {
                        offset: self.offset(),
                        expected: format!("'(' after function `{}`", func.name()),
                        found: self.found(),
                    });
                }
                self.pos += 1;
                self.enter()?;
                let arg = self.expr()?;
                self.depth -= 1;
                self.expect_rparen()?;
                Ok(Node::Call(func, Box::new(arg)))
            }
            _ => Err(Error::Syntax {
                offset: tok.offset,
                expected: PRIMARY_START.into(),
                found: tok.kind.describe(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if matches!(self.next_kind(), Some(Tok::RParen)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.offset(),
                expected: "')'".into(),
                found: self.found(),
            })
        }
    }
}
