//! Arithmetic expressions over `t, z0, w0, z1, w1`.
//!
//! A small Pratt parser turns text such as `2*z0^3 - w0 + 3*z1 - 10*t` into an
//! [`Expr`] tree. Precedence, from tightest to loosest: `^` (integer exponent
//! only), unary `-`, `* /`, `+ -`. Binary operators of equal precedence
//! associate to the left. The [`Display`](std::fmt::Display) impl is a
//! canonical, fully parenthesised printer: parsing its output yields the
//! identical tree.

use std::fmt;

use thiserror::Error;

use crate::system::Point;

/// Free variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    Z0,
    W0,
    Z1,
    W1,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::T, Var::Z0, Var::W0, Var::Z1, Var::W1];

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::Z0 => "z0",
            Var::W0 => "w0",
            Var::Z1 => "z1",
            Var::W1 => "w1",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    fn read(self, p: &Point) -> f64 {
        match self {
            Var::T => p.t,
            Var::Z0 => p.z0,
            Var::W0 => p.w0,
            Var::Z1 => p.z1,
            Var::W1 => p.w1,
        }
    }
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Tanh,
    Atan,
    Abs,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Tanh,
        Func::Atan,
        Func::Abs,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Tanh => x.tanh(),
            Func::Atan => x.atan(),
            Func::Abs => x.abs(),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(EvalError::Domain { func: "sqrt", arg: x });
                }
                x.sqrt()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Literals are always finite and non-negative; negation is
/// an explicit [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` at offset {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    /// Byte offset into the source where the problem was detected.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func}({arg}) is outside the function's domain")]
    Domain { func: &'static str, arg: f64 },
}

impl Expr {
    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(v) => Ok(v.read(p)),
            Expr::Neg(e) => Ok(-e.eval(p)?),
            Expr::Bin(op, a, b) => {
                let a = a.eval(p)?;
                let b = b.eval(p)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero)
                        } else {
                            Ok(a / b)
                        }
                    }
                }
            }
            Expr::Pow(base, n) => {
                let b = base.eval(p)?;
                if b == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(b.powi(*n))
            }
            Expr::Call(f, arg) => f.apply(arg.eval(p)?),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(b, n) => write!(f, "({b}^{n})"),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expression(s)
    }
}

pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr_bp(0)?;
    let next = parser.peek();
    if next.kind != TokenKind::End {
        return Err(syntax(next.offset, format!("unexpected {}", next.kind.describe())));
    }
    Ok(expr)
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Op(c) => format!("operator `{c}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
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
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
                if !value.is_finite() {
                    return Err(syntax(start, format!("number `{text}` is not finite")));
                }
                out.push(Token {
                    kind: TokenKind::Num(value),
                    offset: start,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                i += 1;
                out.push(Token {
                    kind: TokenKind::Op(c as char),
                    offset: start,
                });
            }
            b'(' | b')' | b',' => {
                i += 1;
                let kind = match c {
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    _ => TokenKind::Comma,
                };
                out.push(Token { kind, offset: start });
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token {
        kind: TokenKind::End,
        offset: src.len(),
    });
    Ok(out)
}

const PREFIX_NEG_BP: u8 = 25;

fn infix_binding(op: char) -> Option<(u8, u8)> {
    match op {
        '+' | '-' => Some((10, 11)),
        '*' | '/' => Some((20, 21)),
        '^' => Some((30, 31)),
        _ => None,
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::End {
            self.pos += 1;
        }
        tok
    }

    fn expr_bp(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let tok = self.peek().clone();
            let op = match tok.kind {
                TokenKind::Op(c) => c,
                _ => break,
            };
            let (lbp, rbp) = match infix_binding(op) {
                Some(b) => b,
                None => break,
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            if op == '^' {
                let exp_offset = self.peek().offset;
                let rhs = self.expr_bp(rbp)?;
                let n =
                    integer_exponent(&rhs).ok_or_else(|| syntax(exp_offset, "exponent must be an integer literal"))?;
                lhs = Expr::Pow(Box::new(lhs), n);
                continue;
            }
            let rhs = self.expr_bp(rbp)?;
            let op = match op {
                '+' => BinOp::Add,
                '-' => BinOp::Sub,
                '*' => BinOp::Mul,
                _ => BinOp::Div,
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let tok = self.bump();
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::Op('-') => {
                let operand = self.expr_bp(PREFIX_NEG_BP)?;
                Ok(Expr::Neg(Box::new(operand)))
            }
            TokenKind::LParen => {
                let inner = self.expr_bp(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokenKind::Ident(name) => self.identifier(name, tok.offset),
            other => Err(syntax(tok.offset, format!("unexpected {}", other.describe()))),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if let Some(v) = Var::from_name(&name) {
            return Ok(Expr::Var(v));
        }
        if name == "pi" {
            return Ok(Expr::Num(std::f64::consts::PI));
        }
        let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownIdentifier {
            name: name.clone(),
            offset,
        })?;
        if self.peek().kind != TokenKind::LParen {
            let at = self.peek().offset;
            return Err(syntax(at, format!("expected `(` after function `{name}`")));
        }
        self.bump();
        let mut args = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            loop {
                args.push(self.expr_bp(0)?);
                if self.peek().kind == TokenKind::Comma {
                    self.bump();
                    continue;
                }
                break;
            }
        }
        self.expect_rparen()?;
        if args.len() != 1 {
            return Err(ParseError::Arity {
                name,
                offset,
                expected: 1,
                found: args.len(),
            });
        }
        Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let tok = self.bump();
        if tok.kind == TokenKind::RParen {
            Ok(())
        } else {
            Err(syntax(
                tok.offset,
                format!("expected `)`, found {}", tok.kind.describe()),
            ))
        }
    }
}

fn integer_exponent(e: &Expr) -> Option<i32> {
    let (v, sign) = match e {
        Expr::Num(v) => (*v, 1.0),
        Expr::Neg(inner) => match inner.as_ref() {
            Expr::Num(v) => (*v, -1.0),
            _ => return None,
        },
        _ => return None,
    };
    if v.fract() != 0.0 || v > i32::MAX as f64 {
        return None;
    }
    Some((sign * v) as i32)
}
