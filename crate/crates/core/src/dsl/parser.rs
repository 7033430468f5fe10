//! Recursive-descent expression parser.
//!
//! Precedence, tightest first: `^` (right-associative), unary `-`, `* /`,
//! `+ -`. Unknown identifiers are rejected here so that every surviving tree
//! is fully bound.

use super::ast::{BinOp, Expr, UnOp, Var};
use super::lexer::{lex, Tok, Token};
use crate::error::ParseError;

#[derive(Clone)]
pub struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    pub fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn expect(&mut self, want: &Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.peek().clone();
        if &t.tok == want {
            Ok(self.bump())
        } else {
            Err(ParseError::Syntax { line: t.line, col: t.col, expected: what.to_string() })
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().tok, Tok::Eof)
    }
}

/// Parse a complete expression source string.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut cur = Cursor::new(&toks);
    let e = expr(&mut cur)?;
    let t = cur.peek();
    if !cur.at_eof() {
        return Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: "end of expression".into(),
        });
    }
    Ok(e)
}

pub fn expr(cur: &mut Cursor) -> Result<Expr, ParseError> {
    sum(cur)
}

fn sum(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = product(cur)?;
    loop {
        match cur.peek().tok {
            Tok::Plus => {
                cur.bump();
                lhs = Expr::bin(BinOp::Add, lhs, product(cur)?);
            }
            Tok::Minus => {
                cur.bump();
                lhs = Expr::bin(BinOp::Sub, lhs, product(cur)?);
            }
            _ => return Ok(lhs),
        }
    }
}

fn product(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = unary(cur)?;
    loop {
        match cur.peek().tok {
            Tok::Star => {
                cur.bump();
                lhs = Expr::bin(BinOp::Mul, lhs, unary(cur)?);
            }
            Tok::Slash => {
                cur.bump();
                lhs = Expr::bin(BinOp::Div, lhs, unary(cur)?);
            }
            _ => return Ok(lhs),
        }
    }
}

fn unary(cur: &mut Cursor) -> Result<Expr, ParseError> {
    if matches!(cur.peek().tok, Tok::Minus) {
        cur.bump();
        return Ok(Expr::un(UnOp::Neg, unary(cur)?));
    }
    power(cur)
}

fn power(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let base = atom(cur)?;
    if matches!(cur.peek().tok, Tok::Caret) {
        cur.bump();
        // exponent may itself start with a unary minus; recursion keeps ^ right-associative
        let exponent = unary(cur)?;
        return Ok(Expr::bin(BinOp::Pow, base, exponent));
    }
    Ok(base)
}

fn atom(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let t = cur.peek().clone();
    match t.tok {
        Tok::Num { value, imaginary } => {
            cur.bump();
            Ok(if imaginary { Expr::Lit(0.0, value) } else { Expr::Lit(value, 0.0) })
        }
        Tok::LParen => {
            cur.bump();
            let e = expr(cur)?;
            cur.expect(&Tok::RParen, "`)`")?;
            Ok(e)
        }
        Tok::Ident(name) => {
            cur.bump();
            if let Some(op) = UnOp::from_name(&name) {
                cur.expect(&Tok::LParen, "`(` after function name")?;
                let arg = expr(cur)?;
                cur.expect(&Tok::RParen, "`)`")?;
                return Ok(Expr::un(op, arg));
            }
            match Var::from_name(&name) {
                Some(v) => Ok(Expr::var(v)),
                None => Err(ParseError::UnboundIdentifier { name, line: t.line, col: t.col }),
            }
        }
        _ => Err(ParseError::Syntax {
            line: t.line,
            col: t.col,
            expected: "expression (number, variable, function call or `(`)".into(),
        }),
    }
}
