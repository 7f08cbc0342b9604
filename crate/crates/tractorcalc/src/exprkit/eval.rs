//! Evaluation with reusable scratch.
//!
//! [`EvalScratch`] keeps one f64 slot per pool node and an epoch counter, so
//! repeated evaluation of many expressions at the same point shares subterm
//! values without clearing the buffer between points.

use super::{BinOp, ExprId, Node, Pool, UnOp};
use alloc::vec::Vec;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DomainKind {
    DivByZero,
    LogDomain,
    SqrtDomain,
    NonFinite,
}

/// Evaluation failure, pointing at the offending node.
#[derive(Clone, Copy, Debug)]
pub struct DomainError {
    pub node: ExprId,
    pub kind: DomainKind,
}

pub(crate) fn apply_un(op: UnOp, v: f64) -> Result<f64, DomainKind> {
    Ok(match op {
        UnOp::Neg => -v,
        UnOp::Sin => libm::sin(v),
        UnOp::Cos => libm::cos(v),
        UnOp::Tan => libm::tan(v),
        UnOp::Exp => libm::exp(v),
        UnOp::Log => {
            if v <= 0.0 {
                return Err(DomainKind::LogDomain);
            }
            libm::log(v)
        }
        UnOp::Sqrt => {
            if v < 0.0 {
                return Err(DomainKind::SqrtDomain);
            }
            libm::sqrt(v)
        }
        UnOp::Sinh => libm::sinh(v),
        UnOp::Cosh => libm::cosh(v),
    })
}

/// Binary exponentiation; pow(0, 0) = 1 by convention, pow(0, k<0) = inf
/// (caught as DivByZero by the caller).
pub(crate) fn powi_f64(base: f64, k: i32) -> f64 {
    let mut e = k.unsigned_abs();
    let mut b = base;
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    if k < 0 {
        1.0 / acc
    } else {
        acc
    }
}

pub struct EvalScratch {
    val: Vec<f64>,
    epoch: Vec<u32>,
    cur: u32,
}

impl EvalScratch {
    pub fn new() -> EvalScratch {
        EvalScratch {
            val: Vec::new(),
            epoch: Vec::new(),
            cur: 0,
        }
    }

    /// Start a new evaluation point: all memoized subterm values are dropped.
    pub fn begin(&mut self, pool: &Pool) {
        if self.val.len() < pool.len() {
            self.val.resize(pool.len(), 0.0);
            self.epoch.resize(pool.len(), 0);
        }
        self.cur = self.cur.wrapping_add(1);
        if self.cur == 0 {
            // epoch wrapped; clear stale marks
            for e in &mut self.epoch {
                *e = 0;
            }
            self.cur = 1;
        }
    }

    /// Evaluate `id` at `point` (one value per chart coordinate). Subterms
    /// already evaluated since the last [`begin`](Self::begin) are reused.
    pub fn eval(&mut self, pool: &Pool, id: ExprId, point: &[f64]) -> Result<f64, DomainError> {
        debug_assert_eq!(point.len(), pool.dim());
        let i = id.0 as usize;
        if self.epoch[i] == self.cur {
            return Ok(self.val[i]);
        }
        let v = match pool.node(id) {
            Node::Rat(p, q) => p as f64 / q as f64,
            Node::Dec(b) => f64::from_bits(b),
            Node::Coord(c) => point[c as usize],
            Node::Un(op, a) => {
                let va = self.eval(pool, a, point)?;
                apply_un(op, va).map_err(|kind| DomainError { node: id, kind })?
            }
            Node::Bin(op, a, b) => {
                let va = self.eval(pool, a, point)?;
                let vb = self.eval(pool, b, point)?;
                match op {
                    BinOp::Add => va + vb,
                    BinOp::Sub => va - vb,
                    BinOp::Mul => va * vb,
                    BinOp::Div => {
                        if vb == 0.0 {
                            return Err(DomainError {
                                node: id,
                                kind: DomainKind::DivByZero,
                            });
                        }
                        va / vb
                    }
                }
            }
            Node::Pow(a, k) => {
                let va = self.eval(pool, a, point)?;
                if va == 0.0 && k < 0 {
                    return Err(DomainError {
                        node: id,
                        kind: DomainKind::DivByZero,
                    });
                }
                powi_f64(va, k)
            }
        };
        if !v.is_finite() {
            return Err(DomainError {
                node: id,
                kind: DomainKind::NonFinite,
            });
        }
        self.val[i] = v;
        self.epoch[i] = self.cur;
        Ok(v)
    }
}

impl Default for EvalScratch {
    fn default() -> Self {
        EvalScratch::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::Pool;

    fn eval1(pool: &Pool, id: ExprId, point: &[f64]) -> Result<f64, DomainError> {
        let mut s = EvalScratch::new();
        s.begin(pool);
        s.eval(pool, id, point)
    }

    #[test]
    fn evaluates_composite_expression() {
        let mut p = Pool::new(["x", "y"]);
        let x = p.coord(0);
        let y = p.coord(1);
        let e = {
            let xy = p.mul(x, y);
            let s = p.sin(xy);
            let x2 = p.powi(x, 2);
            p.add(s, x2)
        };
        let v = eval1(&p, e, &[0.7, 1.3]).unwrap();
        assert!((v - (libm::sin(0.7 * 1.3) + 0.49)).abs() < 1e-15);
    }

    #[test]
    fn domain_error_names_the_failing_node() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        let lg = p.log(x);
        let one = p.int(1);
        let e = p.add(lg, one);
        let err = eval1(&p, e, &[-2.0]).unwrap_err();
        assert_eq!(err.node, lg);
        assert_eq!(err.kind, DomainKind::LogDomain);
    }

    #[test]
    fn division_by_zero_at_eval_time() {
        let mut p = Pool::new(["x"]);
        let one = p.int(1);
        let x = p.coord(0);
        let d = p.div(one, x);
        let err = eval1(&p, d, &[0.0]).unwrap_err();
        assert_eq!(err.kind, DomainKind::DivByZero);
        assert_eq!(err.node, d);
    }

    #[test]
    fn negative_power_of_zero_is_div_by_zero() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        let e = p.powi(x, -3);
        let err = eval1(&p, e, &[0.0]).unwrap_err();
        assert_eq!(err.kind, DomainKind::DivByZero);
    }

    #[test]
    fn scratch_reuse_across_points() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        let e = {
            let c = p.cos(x);
            p.mul(c, c)
        };
        let mut s = EvalScratch::new();
        for &t in &[0.0, 0.5, -1.25, 3.0] {
            s.begin(&p);
            let v = s.eval(&p, e, &[t]).unwrap();
            let c = libm::cos(t);
            assert!((v - c * c).abs() < 1e-15);
        }
    }

    #[test]
    fn overflow_reports_non_finite() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        let e = {
            let big = p.exp(x);
            p.mul(big, big)
        };
        let err = eval1(&p, e, &[500.0]).unwrap_err();
        assert_eq!(err.kind, DomainKind::NonFinite);
    }
}
