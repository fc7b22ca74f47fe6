//! Tokenizer, recursive-descent parser, and evaluator for the scalar
//! expression grammar:
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr (',' expr)? ')' | '(' expr ')'
//! ```
//!
//! Functions: `ln`, `exp`, `sqrt`, `abs`, `floor`, `ceil` (unary), `min`,
//! `max` (binary). Constants: `e`, `pi`. Variable names are supplied by the
//! caller (`u`/`v` by default), so the same grammar serves maps in `x` and
//! sequence generators in `n`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Func1 {
    Ln,
    Exp,
    Sqrt,
    Abs,
    Floor,
    Ceil,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Func2 {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Index into the caller-supplied variable list.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call1(Func1, Box<Expr>),
    Call2(Func2, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, args: &[f64]) -> Result<f64> {
        let val = self.eval_raw(args)?;
        if val.is_finite() {
            Ok(val)
        } else {
            Err(Error::domain(format!(
                "non-finite result {val} at args {args:?}"
            )))
        }
    }

    fn eval_raw(&self, args: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Num(c) => *c,
            Expr::Var(i) => args[*i],
            Expr::Neg(e) => -e.eval_raw(args)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval_raw(args)?;
                let y = b.eval_raw(args)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(Error::domain(format!("division by zero ({x} / 0)")));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        let p = x.powf(y);
                        if p.is_nan() {
                            return Err(Error::domain(format!("undefined power {x}^{y}")));
                        }
                        p
                    }
                }
            }
            Expr::Call1(f, a) => {
                let x = a.eval_raw(args)?;
                match f {
                    Func1::Ln => {
                        if x <= 0.0 {
                            return Err(Error::domain(format!("ln of non-positive value {x}")));
                        }
                        x.ln()
                    }
                    Func1::Exp => x.exp(),
                    Func1::Sqrt => {
                        if x < 0.0 {
                            return Err(Error::domain(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                    Func1::Abs => x.abs(),
                    Func1::Floor => x.floor(),
                    Func1::Ceil => x.ceil(),
                }
            }
            Expr::Call2(f, a, b) => {
                let x = a.eval_raw(args)?;
                let y = b.eval_raw(args)?;
                match f {
                    Func2::Min => x.min(y),
                    Func2::Max => x.max(y),
                }
            }
        })
    }

    /// Highest variable index used, plus one (0 for constant expressions).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) => e.arity(),
            Expr::Bin(_, a, b) | Expr::Call2(_, a, b) => a.arity().max(b.arity()),
            Expr::Call1(_, a) => a.arity(),
        }
    }
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
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent suffix only when followed by a digit (optionally
                // signed); a bare `e` after digits is the constant, as in `2e`.
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
                let lit = &text[start..i];
                let val: f64 = lit.parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("bad number literal `{lit}`"),
                })?;
                toks.push((Tok::Num(val), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Parse {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Parse {
                pos,
                msg: format!("expected {what}, found {other:?}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            // Right-associative, and `u^-2` is allowed for convenience.
            let exp = if matches!(self.peek(), Some(Tok::Minus)) {
                self.bump();
                Expr::Neg(Box::new(self.factor()?))
            } else {
                self.factor()?
            };
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.bump();
                    let first = self.expr()?;
                    let second = if matches!(self.peek(), Some(Tok::Comma)) {
                        self.bump();
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    return self.call(&name, first, second, pos);
                }
                if let Some(idx) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(idx));
                }
                match name.as_str() {
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    _ => Err(Error::UnknownIdent(name)),
                }
            }
            other => Err(Error::Parse {
                pos,
                msg: format!("expected a value, found {other:?}"),
            }),
        }
    }

    fn call(&mut self, name: &str, first: Expr, second: Option<Expr>, pos: usize) -> Result<Expr> {
        let f1 = match name {
            "ln" => Some(Func1::Ln),
            "exp" => Some(Func1::Exp),
            "sqrt" => Some(Func1::Sqrt),
            "abs" => Some(Func1::Abs),
            "floor" => Some(Func1::Floor),
            "ceil" => Some(Func1::Ceil),
            _ => None,
        };
        if let Some(f) = f1 {
            return match second {
                None => Ok(Expr::Call1(f, Box::new(first))),
                Some(_) => Err(Error::Arity(format!(
                    "`{name}` takes one argument (at byte {pos})"
                ))),
            };
        }
        let f2 = match name {
            "min" => Some(Func2::Min),
            "max" => Some(Func2::Max),
            _ => None,
        };
        if let Some(f) = f2 {
            return match second {
                Some(s) => Ok(Expr::Call2(f, Box::new(first), Box::new(s))),
                None => Err(Error::Arity(format!(
                    "`{name}` takes two arguments (at byte {pos})"
                ))),
            };
        }
        Err(Error::UnknownIdent(name.to_string()))
    }
}

/// Parse `text` against the given variable names (position = argument index).
pub fn parse(text: &str, vars: &[&str]) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse {
            pos: p.here(),
            msg: "trailing input after expression".to_string(),
        });
    }
    Ok(e)
}
