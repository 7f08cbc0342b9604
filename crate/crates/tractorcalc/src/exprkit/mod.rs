//! Hash-consed symbolic expressions over a fixed coordinate chart.
//!
//! A [`Pool`] owns an append-only arena of [`Node`]s; structurally equal
//! expressions are interned to the same [`ExprId`], so identity doubles as
//! structural equality and everything downstream (differentiation caches,
//! evaluation scratch) can key on the id. Construction goes through the
//! smart constructors on `Pool`, which fold constants and eliminate trivial
//! identities (x+0, x*1, x*0, x^1, ...) but perform no other rewriting:
//! expressions keep the shape the caller built.
//!
//! Rational constants are kept exact (i64 numerator/denominator, normalized);
//! decimal literals and folded transcendentals are `f64`. Arithmetic that
//! would overflow the exact representation demotes to `f64`.

mod diff;
mod eval;
mod parse;
mod print;

pub use eval::{DomainError, DomainKind, EvalScratch};
pub use parse::ParseError;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Handle to an interned expression inside its [`Pool`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ExprId(pub(crate) u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum UnOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// One DAG node. `Dec` stores the f64 bit pattern so the node is `Ord` and
/// can key the interning map; NaN is never constructed.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Node {
    /// Exact rational, normalized: den > 0, gcd(num, den) = 1.
    Rat(i64, i64),
    /// Decimal constant (f64 bits), always finite.
    Dec(u64),
    /// Chart coordinate by index.
    Coord(u8),
    Un(UnOp, ExprId),
    Bin(BinOp, ExprId, ExprId),
    /// Integer power; exponent never 0 or 1 after construction.
    Pow(ExprId, i32),
}

/// Arena of interned expressions over one coordinate chart.
///
/// Construction needs `&mut Pool`; evaluation and printing take `&Pool`, so a
/// frozen pool can be shared across threads.
pub struct Pool {
    coords: Vec<String>,
    nodes: Vec<Node>,
    intern: BTreeMap<Node, ExprId>,
    diff_memo: BTreeMap<(u32, u8), ExprId>,
}

impl Clone for Pool {
    fn clone(&self) -> Self {
        Pool {
            coords: self.coords.clone(),
            nodes: self.nodes.clone(),
            intern: self.intern.clone(),
            diff_memo: self.diff_memo.clone(),
        }
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Normalize p/q and fit it into i64; `None` if q = 0 or it does not fit.
fn norm_rat(mut p: i128, mut q: i128) -> Option<(i64, i64)> {
    if q == 0 {
        return None;
    }
    if q < 0 {
        p = -p;
        q = -q;
    }
    let g = gcd(p, q).max(1);
    p /= g;
    q /= g;
    Some((i64::try_from(p).ok()?, i64::try_from(q).ok()?))
}

impl Pool {
    pub fn new<S: Into<String>>(coords: impl IntoIterator<Item = S>) -> Pool {
        let coords: Vec<String> = coords.into_iter().map(Into::into).collect();
        assert!(coords.len() <= u8::MAX as usize, "chart too large");
        Pool {
            coords,
            nodes: Vec::new(),
            intern: BTreeMap::new(),
            diff_memo: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: ExprId) -> Node {
        self.nodes[id.0 as usize]
    }

    fn intern(&mut self, node: Node) -> ExprId {
        if let Some(&id) = self.intern.get(&node) {
            return id;
        }
        let id = ExprId(u32::try_from(self.nodes.len()).expect("pool overflow"));
        self.nodes.push(node);
        self.intern.insert(node, id);
        id
    }

    // ---- constants and coordinates ----

    pub fn int(&mut self, k: i64) -> ExprId {
        self.intern(Node::Rat(k, 1))
    }

    pub fn rat(&mut self, p: i64, q: i64) -> ExprId {
        match norm_rat(p as i128, q as i128) {
            Some((p, q)) => self.intern(Node::Rat(p, q)),
            None => {
                assert!(q != 0, "rational with zero denominator");
                self.dec(p as f64 / q as f64)
            }
        }
    }

    /// Decimal constant; `v` must be finite. Integral values that fit i64
    /// exactly canonicalize to rationals, so numerically equal constants
    /// reached through folding and through literals intern to one node.
    pub fn dec(&mut self, v: f64) -> ExprId {
        assert!(v.is_finite(), "non-finite constant");
        if v == libm::trunc(v) && v.abs() < 9.0e18 {
            let k = v as i64;
            if k as f64 == v {
                return self.int(k);
            }
        }
        self.intern(Node::Dec(v.to_bits()))
    }

    pub fn coord(&mut self, i: usize) -> ExprId {
        assert!(i < self.coords.len(), "coordinate index out of range");
        self.intern(Node::Coord(i as u8))
    }

    /// Numeric value if the node is a constant.
    pub fn const_val(&self, id: ExprId) -> Option<f64> {
        match self.node(id) {
            Node::Rat(p, q) => Some(p as f64 / q as f64),
            Node::Dec(b) => Some(f64::from_bits(b)),
            _ => None,
        }
    }

    fn as_rat(&self, id: ExprId) -> Option<(i64, i64)> {
        match self.node(id) {
            Node::Rat(p, q) => Some((p, q)),
            _ => None,
        }
    }

    fn is_zero(&self, id: ExprId) -> bool {
        matches!(self.node(id), Node::Rat(0, 1))
    }

    fn is_one(&self, id: ExprId) -> bool {
        matches!(self.node(id), Node::Rat(1, 1))
    }

    // ---- arithmetic ----

    pub fn add(&mut self, a: ExprId, b: ExprId) -> ExprId {
        if self.is_zero(a) {
            return b;
        }
        if self.is_zero(b) {
            return a;
        }
        if let Some(c) = self.fold_bin(BinOp::Add, a, b) {
            return c;
        }
        self.intern(Node::Bin(BinOp::Add, a, b))
    }

    pub fn sub(&mut self, a: ExprId, b: ExprId) -> ExprId {
        if self.is_zero(b) {
            return a;
        }
        if self.is_zero(a) {
            return self.neg(b);
        }
        if a == b {
            // not a rewrite rule: exact cancellation of the same node
            return self.int(0);
        }
        if let Some(c) = self.fold_bin(BinOp::Sub, a, b) {
            return c;
        }
        self.intern(Node::Bin(BinOp::Sub, a, b))
    }

    pub fn mul(&mut self, a: ExprId, b: ExprId) -> ExprId {
        if self.is_zero(a) || self.is_zero(b) {
            return self.int(0);
        }
        if self.is_one(a) {
            return b;
        }
        if self.is_one(b) {
            return a;
        }
        if let Some(c) = self.fold_bin(BinOp::Mul, a, b) {
            return c;
        }
        self.intern(Node::Bin(BinOp::Mul, a, b))
    }

    pub fn div(&mut self, a: ExprId, b: ExprId) -> ExprId {
        if self.is_one(b) {
            return a;
        }
        if self.is_zero(a) && !self.is_zero(b) {
            return self.int(0);
        }
        if let Some(c) = self.fold_bin(BinOp::Div, a, b) {
            return c;
        }
        self.intern(Node::Bin(BinOp::Div, a, b))
    }

    pub fn neg(&mut self, a: ExprId) -> ExprId {
        match self.node(a) {
            Node::Rat(p, q) => self.rat(-p, q),
            Node::Dec(b) => self.dec(-f64::from_bits(b)),
            Node::Un(UnOp::Neg, x) => x,
            _ => self.intern(Node::Un(UnOp::Neg, a)),
        }
    }

    /// Integer power. Exponent 0 folds to 1 (also for x = 0: the evaluation
    /// convention is pow(0,0) = 1), exponent 1 to the base.
    pub fn powi(&mut self, a: ExprId, k: i32) -> ExprId {
        if k == 0 {
            return self.int(1);
        }
        if k == 1 {
            return a;
        }
        if let Some((p, q)) = self.as_rat(a) {
            let (mut bp, mut bq, e) = if k > 0 {
                (p as i128, q as i128, k as u32)
            } else {
                (q as i128, p as i128, k.unsigned_abs())
            };
            if bq != 0 && e <= 63 {
                if let (Some(rp), Some(rq)) = (bp.checked_pow(e), bq.checked_pow(e)) {
                    if let Some((np, nq)) = norm_rat(rp, rq) {
                        return self.intern(Node::Rat(np, nq));
                    }
                }
            }
            bp = 0;
            bq = 0;
            let _ = (bp, bq);
        }
        if let Some(v) = self.const_val(a) {
            let w = eval::powi_f64(v, k);
            if w.is_finite() {
                return self.dec(w);
            }
        }
        self.intern(Node::Pow(a, k))
    }

    pub fn un(&mut self, op: UnOp, a: ExprId) -> ExprId {
        if op == UnOp::Neg {
            return self.neg(a);
        }
        if let Some(v) = self.const_val(a) {
            let w = eval::apply_un(op, v);
            if let Ok(w) = w {
                if w.is_finite() {
                    return self.dec(w);
                }
            }
        }
        self.intern(Node::Un(op, a))
    }

    pub fn sin(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Sin, a)
    }
    pub fn cos(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Cos, a)
    }
    pub fn tan(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Tan, a)
    }
    pub fn exp(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Exp, a)
    }
    pub fn log(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Log, a)
    }
    pub fn sqrt(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Sqrt, a)
    }
    pub fn sinh(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Sinh, a)
    }
    pub fn cosh(&mut self, a: ExprId) -> ExprId {
        self.un(UnOp::Cosh, a)
    }

    fn fold_bin(&mut self, op: BinOp, a: ExprId, b: ExprId) -> Option<ExprId> {
        // exact rational folding first
        if let (Some((ap, aq)), Some((bp, bq))) = (self.as_rat(a), self.as_rat(b)) {
            let (ap, aq, bp, bq) = (ap as i128, aq as i128, bp as i128, bq as i128);
            let (p, q) = match op {
                BinOp::Add => (ap * bq + bp * aq, aq * bq),
                BinOp::Sub => (ap * bq - bp * aq, aq * bq),
                BinOp::Mul => (ap * bp, aq * bq),
                BinOp::Div => {
                    if bp == 0 {
                        return None; // division by zero stays symbolic; eval reports it
                    }
                    (ap * bq, aq * bp)
                }
            };
            if let Some((np, nq)) = norm_rat(p, q) {
                return Some(self.intern(Node::Rat(np, nq)));
            }
            // fall through to f64 folding on overflow
        }
        let (va, vb) = (self.const_val(a)?, self.const_val(b)?);
        let w = match op {
            BinOp::Add => va + vb,
            BinOp::Sub => va - vb,
            BinOp::Mul => va * vb,
            BinOp::Div => {
                if vb == 0.0 {
                    return None;
                }
                va / vb
            }
        };
        if w.is_finite() {
            Some(self.dec(w))
        } else {
            None
        }
    }

    // ---- convenience builders used heavily by the geometry layers ----

    /// Sum of a slice of terms (0 for an empty slice).
    pub fn sum(&mut self, terms: &[ExprId]) -> ExprId {
        let mut acc = self.int(0);
        for &t in terms {
            acc = self.add(acc, t);
        }
        acc
    }

    /// a + b*c, the workhorse of index contractions.
    pub fn mul_add(&mut self, acc: ExprId, b: ExprId, c: ExprId) -> ExprId {
        let p = self.mul(b, c);
        self.add(acc, p)
    }

    pub fn scale(&mut self, k: i64, a: ExprId) -> ExprId {
        let c = self.int(k);
        self.mul(c, a)
    }

    pub fn scale_rat(&mut self, p: i64, q: i64, a: ExprId) -> ExprId {
        let c = self.rat(p, q);
        self.mul(c, a)
    }
}
