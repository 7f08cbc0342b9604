//! Recursive-descent parser for the closed-form expression grammar.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := ("-")? power
//! power  := atom ("^" integer)?
//! atom   := number | ident | func "(" expr ")" | "(" expr ")"
//! func   := "sin"|"cos"|"tan"|"exp"|"log"|"sqrt"|"sinh"|"cosh"
//! ```
//!
//! Whitespace is insignificant. Identifiers start with an ASCII letter and
//! continue with letters, digits or underscores; every identifier that is not
//! a function name must be a declared chart coordinate. Function names are
//! reserved, so a chart must not name a coordinate `sin`, `exp`, etc.
//!
//! Rational literals like `1/2` are handled by the ordinary division rule:
//! constant folding in [`Pool::div`] turns them into exact rationals, which
//! gives the same node the dedicated literal form would.

use super::{ExprId, Pool, UnOp};
use alloc::format;
use alloc::string::String;
use core::fmt;

#[derive(Clone, Debug)]
pub struct ParseError {
    /// 1-based source line.
    pub line: u32,
    /// 1-based column (in bytes) on that line.
    pub col: u32,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Tok<'s> {
    Int(i64),
    /// Integer literal too large for i64, kept as its double value.
    BigInt(f64),
    Dec(f64),
    Ident(&'s str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl<'s> Tok<'s> {
    fn describe(&self) -> String {
        match self {
            Tok::Int(k) => format!("'{k}'"),
            Tok::BigInt(_) | Tok::Dec(_) => String::from("number"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => String::from("'+'"),
            Tok::Minus => String::from("'-'"),
            Tok::Star => String::from("'*'"),
            Tok::Slash => String::from("'/'"),
            Tok::Caret => String::from("'^'"),
            Tok::LParen => String::from("'('"),
            Tok::RParen => String::from("')'"),
            Tok::Eof => String::from("end of input"),
        }
    }
}

struct Lexer<'s> {
    src: &'s [u8],
    pos: usize,
    line: u32,
    col: u32,
}

struct Spanned<'s> {
    tok: Tok<'s>,
    line: u32,
    col: u32,
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str) -> Lexer<'s> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> u8 {
        let b = self.src[self.pos];
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        b
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn err(&self, line: u32, col: u32, msg: String) -> ParseError {
        ParseError { line, col, msg }
    }

    fn next(&mut self) -> Result<Spanned<'s>, ParseError> {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let spanned = |tok| Spanned { tok, line, col };
        let Some(b) = self.peek() else {
            return Ok(spanned(Tok::Eof));
        };
        let tok = match b {
            b'+' => {
                self.bump();
                Tok::Plus
            }
            b'-' => {
                self.bump();
                Tok::Minus
            }
            b'*' => {
                self.bump();
                Tok::Star
            }
            b'/' => {
                self.bump();
                Tok::Slash
            }
            b'^' => {
                self.bump();
                Tok::Caret
            }
            b'(' => {
                self.bump();
                Tok::LParen
            }
            b')' => {
                self.bump();
                Tok::RParen
            }
            b'0'..=b'9' => return self.number(line, col),
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = self.pos;
                while matches!(
                    self.peek(),
                    Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_')
                ) {
                    self.bump();
                }
                let s = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Tok::Ident(s)
            }
            _ => {
                return Err(self.err(
                    line,
                    col,
                    format!("unexpected character '{}'", char::from(b)),
                ))
            }
        };
        Ok(spanned(tok))
    }

    fn number(&mut self, line: u32, col: u32) -> Result<Spanned<'s>, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.bump();
        }
        let mut decimal = false;
        if self.peek() == Some(b'.') {
            decimal = true;
            self.bump();
            if !matches!(self.peek(), Some(b'0'..=b'9')) {
                return Err(self.err(self.line, self.col, String::from("digit expected after '.'")));
            }
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            decimal = true;
            self.bump();
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.bump();
            }
            if !matches!(self.peek(), Some(b'0'..=b'9')) {
                return Err(self.err(
                    self.line,
                    self.col,
                    String::from("digit expected in exponent"),
                ));
            }
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.bump();
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let tok = if decimal {
            let v: f64 = text
                .parse()
                .map_err(|_| self.err(line, col, format!("malformed number '{text}'")))?;
            if !v.is_finite() {
                return Err(self.err(line, col, format!("number '{text}' overflows")));
            }
            Tok::Dec(v)
        } else {
            match text.parse::<i64>() {
                Ok(k) => Tok::Int(k),
                Err(_) => {
                    let v: f64 = text.parse().unwrap();
                    if !v.is_finite() {
                        return Err(self.err(line, col, format!("number '{text}' overflows")));
                    }
                    Tok::BigInt(v)
                }
            }
        };
        Ok(Spanned { tok, line, col })
    }
}

fn func_op(name: &str) -> Option<UnOp> {
    Some(match name {
        "sin" => UnOp::Sin,
        "cos" => UnOp::Cos,
        "tan" => UnOp::Tan,
        "exp" => UnOp::Exp,
        "log" => UnOp::Log,
        "sqrt" => UnOp::Sqrt,
        "sinh" => UnOp::Sinh,
        "cosh" => UnOp::Cosh,
        _ => return None,
    })
}

struct Parser<'p, 's> {
    pool: &'p mut Pool,
    lex: Lexer<'s>,
    cur: Spanned<'s>,
}

impl<'p, 's> Parser<'p, 's> {
    fn advance(&mut self) -> Result<(), ParseError> {
        self.cur = self.lex.next()?;
        Ok(())
    }

    fn err_here(&self, msg: String) -> ParseError {
        ParseError {
            line: self.cur.line,
            col: self.cur.col,
            msg,
        }
    }

    fn expr(&mut self) -> Result<ExprId, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.cur.tok {
                Tok::Plus => {
                    self.advance()?;
                    let rhs = self.term()?;
                    acc = self.pool.add(acc, rhs);
                }
                Tok::Minus => {
                    self.advance()?;
                    let rhs = self.term()?;
                    acc = self.pool.sub(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<ExprId, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.cur.tok {
                Tok::Star => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    acc = self.pool.mul(acc, rhs);
                }
                Tok::Slash => {
                    self.advance()?;
                    let rhs = self.factor()?;
                    acc = self.pool.div(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<ExprId, ParseError> {
        if self.cur.tok == Tok::Minus {
            self.advance()?;
            let inner = self.power()?;
            Ok(self.pool.neg(inner))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ExprId, ParseError> {
        let base = self.atom()?;
        if self.cur.tok != Tok::Caret {
            return Ok(base);
        }
        self.advance()?;
        let negative = if self.cur.tok == Tok::Minus {
            self.advance()?;
            true
        } else {
            false
        };
        let k = match self.cur.tok {
            Tok::Int(k) => k,
            _ => {
                return Err(self.err_here(format!(
                    "exponent must be an integer literal, found {}",
                    self.cur.tok.describe()
                )))
            }
        };
        let k = i32::try_from(if negative { -k } else { k })
            .map_err(|_| self.err_here(format!("exponent {k} out of range")))?;
        self.advance()?;
        Ok(self.pool.powi(base, k))
    }

    fn atom(&mut self) -> Result<ExprId, ParseError> {
        match self.cur.tok {
            Tok::Int(k) => {
                self.advance()?;
                Ok(self.pool.int(k))
            }
            Tok::BigInt(v) | Tok::Dec(v) => {
                self.advance()?;
                Ok(self.pool.dec(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                if self.cur.tok != Tok::RParen {
                    return Err(self.err_here(format!(
                        "expected ')', found {}",
                        self.cur.tok.describe()
                    )));
                }
                self.advance()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(op) = func_op(name) {
                    self.advance()?;
                    if self.cur.tok != Tok::LParen {
                        return Err(self.err_here(format!("expected '(' after '{name}'")));
                    }
                    self.advance()?;
                    let arg = self.expr()?;
                    if self.cur.tok != Tok::RParen {
                        return Err(self.err_here(format!(
                            "expected ')', found {}",
                            self.cur.tok.describe()
                        )));
                    }
                    self.advance()?;
                    Ok(self.pool.un(op, arg))
                } else {
                    let idx = self
                        .pool
                        .coords()
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| self.err_here(format!("undeclared identifier '{name}'")))?;
                    self.advance()?;
                    Ok(self.pool.coord(idx))
                }
            }
            _ => Err(self.err_here(format!(
                "expected a number, coordinate, function or '(', found {}",
                self.cur.tok.describe()
            ))),
        }
    }
}

impl Pool {
    /// Parse `src` over this pool's chart.
    pub fn parse(&mut self, src: &str) -> Result<ExprId, ParseError> {
        let mut lex = Lexer::new(src);
        let cur = lex.next()?;
        let mut p = Parser {
            pool: self,
            lex,
            cur,
        };
        let e = p.expr()?;
        if p.cur.tok != Tok::Eof {
            return Err(p.err_here(format!("unexpected {}", p.cur.tok.describe())));
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::{BinOp, Node};

    #[test]
    fn grammar_shape() {
        let mut p = Pool::new(["x", "y"]);
        let e = p.parse("x^2 + sin(y)").unwrap();
        let x = p.coord(0);
        let y = p.coord(1);
        let want = {
            let x2 = p.powi(x, 2);
            let s = p.sin(y);
            p.add(x2, s)
        };
        assert_eq!(e, want);
    }

    #[test]
    fn double_plus_is_a_syntax_error_at_the_second_plus() {
        let mut p = Pool::new(["x", "y"]);
        let err = p.parse("x + + y").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));
    }

    #[test]
    fn undeclared_identifier() {
        let mut p = Pool::new(["x", "y"]);
        let err = p.parse("z").unwrap_err();
        assert!(err.msg.contains("undeclared identifier 'z'"));
    }

    #[test]
    fn non_integer_exponent_rejected() {
        let mut p = Pool::new(["x", "y"]);
        let err = p.parse("x^y").unwrap_err();
        assert!(err.msg.contains("integer"));
        let err = p.parse("x^1.5").unwrap_err();
        assert!(err.msg.contains("integer"));
    }

    #[test]
    fn rational_literal_folds_exactly() {
        let mut p = Pool::new(["x"]);
        let e = p.parse("1/2").unwrap();
        assert_eq!(p.node(e), Node::Rat(1, 2));
        let e = p.parse("-2/4").unwrap();
        assert_eq!(p.node(e), Node::Rat(-1, 2));
    }

    #[test]
    fn precedence_and_associativity() {
        let mut p = Pool::new(["a", "b", "c"]);
        let e = p.parse("a - b - c").unwrap();
        let (a, b, c) = (p.coord(0), p.coord(1), p.coord(2));
        let want = {
            let ab = p.sub(a, b);
            p.sub(ab, c)
        };
        assert_eq!(e, want);
        let e = p.parse("a + b*c^2").unwrap();
        let want = {
            let c2 = p.powi(c, 2);
            let bc2 = p.mul(b, c2);
            p.add(a, bc2)
        };
        assert_eq!(e, want);
    }

    #[test]
    fn unary_minus_binds_a_power() {
        let mut p = Pool::new(["x"]);
        let e = p.parse("-x^2").unwrap();
        let x = p.coord(0);
        let want = {
            let x2 = p.powi(x, 2);
            p.neg(x2)
        };
        assert_eq!(e, want);
    }

    #[test]
    fn negative_exponent() {
        let mut p = Pool::new(["x"]);
        let e = p.parse("cos(x)^-2").unwrap();
        let x = p.coord(0);
        let want = {
            let c = p.cos(x);
            p.powi(c, -2)
        };
        assert_eq!(e, want);
    }

    #[test]
    fn whitespace_and_newlines_are_insignificant() {
        let mut p = Pool::new(["x", "y"]);
        let a = p.parse("x*y + exp(x)").unwrap();
        let b = p.parse(" x\n\t* y\n + exp( x )\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn error_position_crosses_lines() {
        let mut p = Pool::new(["x"]);
        let err = p.parse("x +\n  )").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
    }

    #[test]
    fn function_requires_parenthesis() {
        let mut p = Pool::new(["x"]);
        let err = p.parse("sin x").unwrap_err();
        assert!(err.msg.contains("expected '('"));
    }

    #[test]
    fn trailing_garbage_rejected() {
        let mut p = Pool::new(["x", "y"]);
        let err = p.parse("x y").unwrap_err();
        assert!(err.msg.contains("'y'"));
    }

    #[test]
    fn huge_integer_literal_becomes_decimal() {
        let mut p = Pool::new(["x"]);
        let e = p.parse("123456789012345678901234567890").unwrap();
        match p.node(e) {
            Node::Dec(b) => assert!((f64::from_bits(b) - 1.2345678901234568e29).abs() < 1e14),
            n => panic!("expected decimal, got {n:?}"),
        }
    }

    #[test]
    fn double_unary_minus_is_rejected() {
        let mut p = Pool::new(["x"]);
        assert!(p.parse("--x").is_err());
        // but a binary minus followed by a unary one is fine
        let e = p.parse("x - -x").unwrap();
        assert!(matches!(p.node(e), Node::Bin(BinOp::Sub, _, _)));
    }
}
