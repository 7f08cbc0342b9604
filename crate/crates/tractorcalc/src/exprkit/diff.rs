//! Symbolic partial differentiation.
//!
//! Results are memoized per (node, coordinate) pair, so differentiating a
//! curvature tensor whose entries share subterms costs each distinct subterm
//! once. The memo lives on the pool because derivatives are new nodes.

use super::{BinOp, ExprId, Node, Pool, UnOp};

impl Pool {
    /// d(expr)/d(coord i).
    pub fn diff(&mut self, id: ExprId, i: usize) -> ExprId {
        debug_assert!(i < self.dim());
        let key = (id.0, i as u8);
        if let Some(&d) = self.diff_memo.get(&key) {
            return d;
        }
        let d = match self.node(id) {
            Node::Rat(..) | Node::Dec(_) => self.int(0),
            Node::Coord(c) => {
                if c as usize == i {
                    self.int(1)
                } else {
                    self.int(0)
                }
            }
            Node::Un(op, a) => {
                let da = self.diff(a, i);
                if self.is_zero(da) {
                    da
                } else {
                    let outer = match op {
                        UnOp::Neg => return self.memo_diff(key, |p| p.neg(da)),
                        UnOp::Sin => self.cos(a),
                        UnOp::Cos => {
                            let s = self.sin(a);
                            self.neg(s)
                        }
                        UnOp::Tan => {
                            // 1/cos^2
                            let c = self.cos(a);
                            self.powi(c, -2)
                        }
                        UnOp::Exp => id,
                        UnOp::Log => return self.memo_diff(key, |p| p.div(da, a)),
                        UnOp::Sqrt => {
                            // 1/(2 sqrt)
                            let two = self.int(2);
                            let den = self.mul(two, id);
                            let one = self.int(1);
                            self.div(one, den)
                        }
                        UnOp::Sinh => self.cosh(a),
                        UnOp::Cosh => self.sinh(a),
                    };
                    self.mul(outer, da)
                }
            }
            Node::Bin(op, a, b) => {
                let da = self.diff(a, i);
                let db = self.diff(b, i);
                match op {
                    BinOp::Add => self.add(da, db),
                    BinOp::Sub => self.sub(da, db),
                    BinOp::Mul => {
                        let t1 = self.mul(da, b);
                        let t2 = self.mul(a, db);
                        self.add(t1, t2)
                    }
                    BinOp::Div => {
                        // (da*b - a*db)/b^2
                        let t1 = self.mul(da, b);
                        let t2 = self.mul(a, db);
                        let num = self.sub(t1, t2);
                        let b2 = self.powi(b, 2);
                        self.div(num, b2)
                    }
                }
            }
            Node::Pow(a, k) => {
                let da = self.diff(a, i);
                if self.is_zero(da) {
                    da
                } else {
                    let kk = self.int(k as i64);
                    let am = self.powi(a, k - 1);
                    let t = self.mul(kk, am);
                    self.mul(t, da)
                }
            }
        };
        self.diff_memo.insert(key, d);
        d
    }

    fn memo_diff(&mut self, key: (u32, u8), f: impl FnOnce(&mut Pool) -> ExprId) -> ExprId {
        let d = f(self);
        self.diff_memo.insert(key, d);
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprkit::EvalScratch;

    fn ev(pool: &Pool, id: ExprId, point: &[f64]) -> f64 {
        let mut s = EvalScratch::new();
        s.begin(pool);
        s.eval(pool, id, point).unwrap()
    }

    #[test]
    fn product_and_chain_rule() {
        let mut p = Pool::new(["x", "y"]);
        let x = p.coord(0);
        let y = p.coord(1);
        // d/dx [x^2 sin(xy)] = 2x sin(xy) + x^2 y cos(xy)
        let e = {
            let x2 = p.powi(x, 2);
            let xy = p.mul(x, y);
            let s = p.sin(xy);
            p.mul(x2, s)
        };
        let d = p.diff(e, 0);
        let (xv, yv) = (0.8, -1.1);
        let want = 2.0 * xv * libm::sin(xv * yv) + xv * xv * yv * libm::cos(xv * yv);
        assert!((ev(&p, d, &[xv, yv]) - want).abs() < 1e-14);
    }

    #[test]
    fn mixed_second_derivative_of_exp() {
        // d^2/dxdy exp(xy) at (1,1) = (1 + xy) e^{xy} = 2e
        let mut p = Pool::new(["x", "y"]);
        let x = p.coord(0);
        let y = p.coord(1);
        let e = {
            let xy = p.mul(x, y);
            p.exp(xy)
        };
        let dx = p.diff(e, 0);
        let dxy = p.diff(dx, 1);
        let v = ev(&p, dxy, &[1.0, 1.0]);
        assert!((v - 5.43656365691809).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_sin_evaluates_to_cos() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        let s = p.sin(x);
        let d = p.diff(s, 0);
        let v = ev(&p, d, &[0.3]);
        assert!((v - 0.955336489125606).abs() < 1e-14);
    }

    #[test]
    fn quotient_rule_against_closed_form() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        // d/dx [x/(1+x^2)] = (1 - x^2)/(1+x^2)^2
        let e = {
            let one = p.int(1);
            let x2 = p.powi(x, 2);
            let den = p.add(one, x2);
            p.div(x, den)
        };
        let d = p.diff(e, 0);
        let xv = 1.7;
        let want = (1.0 - xv * xv) / (1.0 + xv * xv) / (1.0 + xv * xv);
        assert!((ev(&p, d, &[xv]) - want).abs() < 1e-15);
    }

    #[test]
    fn diff_is_memoized() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        let e = {
            let s = p.sin(x);
            let c = p.cos(x);
            p.mul(s, c)
        };
        let d1 = p.diff(e, 0);
        let before = p.len();
        let d2 = p.diff(e, 0);
        assert_eq!(d1, d2);
        assert_eq!(p.len(), before);
    }

    #[test]
    fn log_and_sqrt_rules() {
        let mut p = Pool::new(["x"]);
        let x = p.coord(0);
        let lg = p.log(x);
        let dl = p.diff(lg, 0);
        assert!((ev(&p, dl, &[4.0]) - 0.25).abs() < 1e-15);
        let sq = p.sqrt(x);
        let ds = p.diff(sq, 0);
        assert!((ev(&p, ds, &[4.0]) - 0.25).abs() < 1e-15);
    }
}
