//! Rendering expressions back to grammar-conformant text.
//!
//! The printer inserts parentheses so that reparsing the output rebuilds the
//! identical node, including association order: `a*(b*c)` stays distinct
//! from `(a*b)*c`. Rational constants print as `p/q` and are treated with
//! division precedence, negative constants with unary-minus precedence, so
//! positions that would regroup them get parentheses.

use super::{BinOp, ExprId, Node, Pool, UnOp};
use alloc::string::String;
use core::fmt::{self, Write};

/// Display adapter borrowing the pool.
pub struct Printed<'p> {
    pool: &'p Pool,
    id: ExprId,
}

impl Pool {
    pub fn display(&self, id: ExprId) -> Printed<'_> {
        Printed { pool: self, id }
    }

    pub fn to_text(&self, id: ExprId) -> String {
        let mut s = String::new();
        write!(s, "{}", self.display(id)).unwrap();
        s
    }
}

impl fmt::Display for Printed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        emit(self.pool, self.id, 0, f)
    }
}

/// Effective precedence of the printed form: 1 sums, 2 products and anything
/// carrying a leading minus or a `/`, 3 powers, 4 atoms.
fn prec(pool: &Pool, id: ExprId) -> u8 {
    match pool.node(id) {
        Node::Rat(p, q) => {
            if q != 1 || p < 0 {
                2
            } else {
                4
            }
        }
        Node::Dec(b) => {
            if f64::from_bits(b) < 0.0 {
                2
            } else {
                4
            }
        }
        Node::Coord(_) => 4,
        Node::Un(UnOp::Neg, _) => 2,
        Node::Un(..) => 4,
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Pow(..) => 3,
    }
}

fn emit(pool: &Pool, id: ExprId, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(pool, id) < min {
        f.write_char('(')?;
        emit(pool, id, 0, f)?;
        return f.write_char(')');
    }
    match pool.node(id) {
        Node::Rat(p, 1) => write!(f, "{p}"),
        Node::Rat(p, q) => write!(f, "{p}/{q}"),
        Node::Dec(b) => {
            let v = f64::from_bits(b);
            // f64 Display is shortest round-trip, so reparse is exact
            write!(f, "{v}")
        }
        Node::Coord(c) => f.write_str(&pool.coords()[c as usize]),
        Node::Un(UnOp::Neg, a) => {
            f.write_char('-')?;
            emit(pool, a, 3, f)
        }
        Node::Un(op, a) => {
            let name = match op {
                UnOp::Neg => unreachable!(),
                UnOp::Sin => "sin",
                UnOp::Cos => "cos",
                UnOp::Tan => "tan",
                UnOp::Exp => "exp",
                UnOp::Log => "log",
                UnOp::Sqrt => "sqrt",
                UnOp::Sinh => "sinh",
                UnOp::Cosh => "cosh",
            };
            f.write_str(name)?;
            f.write_char('(')?;
            emit(pool, a, 0, f)?;
            f.write_char(')')
        }
        Node::Bin(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
            };
            emit(pool, a, lp, f)?;
            f.write_str(sym)?;
            emit(pool, b, rp, f)
        }
        Node::Pow(a, k) => {
            emit(pool, a, 4, f)?;
            write!(f, "^{k}")
        }
    }
}
