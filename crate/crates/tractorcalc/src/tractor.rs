//! The standard tractor bundle in a fixed scale.
//!
//! Tractor indices run over N = n+2 slots laid out as slot 0 = Y direction,
//! slots 1..=n = Z directions, slot n+1 = X direction. In this layout a
//! lower-index tractor W_A reads (sigma, mu_b, rho) and the connection acts
//! by
//!
//! ```text
//! (D_a W)_0     = d_a sigma - mu_a
//! (D_a W)_{1+b} = D_a mu_b + g_ab rho + P_ab sigma
//! (D_a W)_{n+1} = d_a rho - P_a^e mu_e
//! ```
//!
//! which is encoded once as the coefficient matrix `theta[a, A, E]` with
//! (D_a W)_A = d_a W_A + theta[a,A,E] W_E on lower slots and (D_a V)^A =
//! d_a V^A - theta[a,E,A] V^E on upper ones; tensor slots take the usual
//! Gamma corrections. The tractor curvature is computed two independent
//! ways, from the Weyl/Cotton formula and from the connection commutator on
//! a constant tractor basis; their agreement pins every sign in the chain.

use crate::geocalc::{CurvatureBundle, Geometry, TensorField};
use alloc::vec;

/// Index variance for the coupled connection; tensor slots range over n,
/// tractor slots over N = n+2.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CoupledSlot {
    Up,
    Low,
    TracUp,
    TracLow,
}

/// Tractor metric, its inverse, and the connection coefficients, all in the
/// scale of the geometry they were built from.
pub struct TractorFrame {
    n: usize,
    pub h: TensorField,
    pub hinv: TensorField,
    pub theta: TensorField,
}

impl TractorFrame {
    pub fn n(&self) -> usize {
        self.n
    }

    /// N = n + 2.
    pub fn dim(&self) -> usize {
        self.n + 2
    }

    /// Slot of the upper-index X tractor (X^A = delta_0).
    pub fn x_up_slot(&self) -> usize {
        0
    }

    /// Slot of the upper-index Y tractor (Y^A = delta_{n+1}).
    pub fn y_up_slot(&self) -> usize {
        self.n + 1
    }

    pub fn build(geo: &mut Geometry, cur: &CurvatureBundle) -> TractorFrame {
        let n = geo.n();
        let nn = n + 2;
        let one = geo.pool.int(1);
        let mut h = TensorField::zeros(&mut geo.pool, &[nn, nn]);
        let mut hinv = TensorField::zeros(&mut geo.pool, &[nn, nn]);
        h.set(&[0, n + 1], one);
        h.set(&[n + 1, 0], one);
        hinv.set(&[0, n + 1], one);
        hinv.set(&[n + 1, 0], one);
        for a in 0..n {
            for b in 0..n {
                h.set(&[1 + a, 1 + b], geo.g.get(&[a, b]));
                hinv.set(&[1 + a, 1 + b], cur.ginv.get(&[a, b]));
            }
        }

        // P with the second index raised, for the X-row of theta
        let mut praised = TensorField::zeros(&mut geo.pool, &[n, n]);
        for a in 0..n {
            for e in 0..n {
                let mut acc = geo.pool.int(0);
                for b in 0..n {
                    let pab = cur.p.get(&[a, b]);
                    let gbe = cur.ginv.get(&[b, e]);
                    acc = geo.pool.mul_add(acc, pab, gbe);
                }
                praised.set(&[a, e], acc);
            }
        }

        let mut theta = TensorField::zeros(&mut geo.pool, &[n, nn, nn]);
        let mone = geo.pool.int(-1);
        for a in 0..n {
            theta.set(&[a, 0, 1 + a], mone);
            for b in 0..n {
                theta.set(&[a, 1 + b, 0], cur.p.get(&[a, b]));
                for e in 0..n {
                    let gm = cur.gamma.get(&[e, a, b]);
                    let v = geo.pool.neg(gm);
                    theta.set(&[a, 1 + b, 1 + e], v);
                }
                theta.set(&[a, 1 + b, n + 1], geo.g.get(&[a, b]));
                let pr = praised.get(&[a, b]);
                let v = geo.pool.neg(pr);
                theta.set(&[a, n + 1, 1 + b], v);
            }
        }

        TractorFrame { n, h, hinv, theta }
    }

    /// Raise or lower one tractor slot with h / h^{ -1 }.
    pub fn move_tractor_slot(
        &self,
        geo: &mut Geometry,
        field: &TensorField,
        slot: usize,
        to_low: bool,
    ) -> TensorField {
        let nn = self.dim();
        assert_eq!(field.shape()[slot], nn);
        let metric = if to_low { &self.h } else { &self.hinv };
        let metric = metric.clone();
        let mut out = TensorField::zeros(&mut geo.pool, field.shape());
        let rank = field.rank();
        let mut idx = vec![0usize; rank];
        let mut src = vec![0usize; rank];
        for l in 0..field.len() {
            field.unlin(l, &mut idx);
            let mut acc = geo.pool.int(0);
            for e in 0..nn {
                src.copy_from_slice(&idx);
                src[slot] = e;
                let m = metric.get(&[idx[slot], e]);
                let t = field.get(&src);
                acc = geo.pool.mul_add(acc, m, t);
            }
            out.set(&idx, acc);
        }
        out
    }
}

/// Coupled Levi-Civita / tractor covariant derivative; the derivative index
/// comes first in the result.
pub fn coupled_derivative(
    geo: &mut Geometry,
    cur: &CurvatureBundle,
    frame: &TractorFrame,
    field: &TensorField,
    slots: &[CoupledSlot],
) -> TensorField {
    let n = geo.n();
    let nn = frame.dim();
    assert_eq!(field.rank(), slots.len());
    for (k, &slot) in slots.iter().enumerate() {
        let want = match slot {
            CoupledSlot::Up | CoupledSlot::Low => n,
            CoupledSlot::TracUp | CoupledSlot::TracLow => nn,
        };
        assert_eq!(field.shape()[k], want, "slot {k} range mismatch");
    }
    let mut out_shape = vec![n];
    out_shape.extend_from_slice(field.shape());
    let mut out = TensorField::zeros(&mut geo.pool, &out_shape);
    let rank = field.rank();
    let mut idx = vec![0usize; rank];
    let mut shifted = vec![0usize; rank];
    let mut oidx = vec![0usize; rank + 1];
    for l in 0..field.len() {
        field.unlin(l, &mut idx);
        let t = field.get(&idx);
        for a in 0..n {
            let mut acc = geo.pool.diff(t, a);
            for (k, &slot) in slots.iter().enumerate() {
                let range = match slot {
                    CoupledSlot::Up | CoupledSlot::Low => n,
                    CoupledSlot::TracUp | CoupledSlot::TracLow => nn,
                };
                for e in 0..range {
                    shifted.copy_from_slice(&idx);
                    shifted[k] = e;
                    let te = field.get(&shifted);
                    match slot {
                        CoupledSlot::Up => {
                            let gm = cur.gamma.get(&[idx[k], a, e]);
                            acc = geo.pool.mul_add(acc, gm, te);
                        }
                        CoupledSlot::Low => {
                            let gm = cur.gamma.get(&[e, a, idx[k]]);
                            let t = geo.pool.mul(gm, te);
                            acc = geo.pool.sub(acc, t);
                        }
                        CoupledSlot::TracLow => {
                            let th = frame.theta.get(&[a, idx[k], e]);
                            acc = geo.pool.mul_add(acc, th, te);
                        }
                        CoupledSlot::TracUp => {
                            let th = frame.theta.get(&[a, e, idx[k]]);
                            let t = geo.pool.mul(th, te);
                            acc = geo.pool.sub(acc, t);
                        }
                    }
                }
            }
            oidx[0] = a;
            oidx[1..].copy_from_slice(&idx);
            out.set(&oidx, acc);
        }
    }
    out
}

/// Tractor curvature assembled from Weyl and Cotton: the Z-Z block carries
/// C_abcd, the X-Z blocks carry -/+ A_cab, and every Y row and column is
/// zero, so Omega_abAB X^A = 0 holds by construction. All indices lower;
/// shape [n, n, N, N].
pub fn curvature_formula(geo: &mut Geometry, cur: &CurvatureBundle) -> TensorField {
    let n = geo.n();
    let nn = n + 2;
    let mut omega = TensorField::zeros(&mut geo.pool, &[n, n, nn, nn]);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for c in 0..n {
                for d in 0..n {
                    omega.set(&[a, b, 1 + c, 1 + d], cur.weyl.get(&[a, b, c, d]));
                }
                let ct = cur.cotton.get(&[c, a, b]);
                omega.set(&[a, b, 1 + c, n + 1], ct);
                let nct = geo.pool.neg(ct);
                omega.set(&[a, b, n + 1, 1 + c], nct);
            }
        }
    }
    omega
}

/// Tractor curvature from the connection commutator: apply the coupled
/// derivative twice to each constant upper basis tractor, antisymmetrize the
/// derivative pair, then lower the surviving tractor index with h. Shape and
/// index placement match [`curvature_formula`].
pub fn curvature_commutator(
    geo: &mut Geometry,
    cur: &CurvatureBundle,
    frame: &TractorFrame,
) -> TensorField {
    let n = geo.n();
    let nn = frame.dim();
    let mut omega_up = TensorField::zeros(&mut geo.pool, &[n, n, nn, nn]);
    for basis in 0..nn {
        let mut v = TensorField::zeros(&mut geo.pool, &[nn]);
        let one = geo.pool.int(1);
        v.set(&[basis], one);
        let d1 = coupled_derivative(geo, cur, frame, &v, &[CoupledSlot::TracUp]);
        let d2 = coupled_derivative(
            geo,
            cur,
            frame,
            &d1,
            &[CoupledSlot::Low, CoupledSlot::TracUp],
        );
        for a in 0..n {
            for b in 0..n {
                for cap_a in 0..nn {
                    let x = d2.get(&[a, b, cap_a]);
                    let y = d2.get(&[b, a, cap_a]);
                    let f = geo.pool.sub(x, y);
                    omega_up.set(&[a, b, cap_a, basis], f);
                }
            }
        }
    }
    // lower the first tractor index
    let mut omega = TensorField::zeros(&mut geo.pool, &[n, n, nn, nn]);
    for a in 0..n {
        for b in 0..n {
            for cap_a in 0..nn {
                for cap_b in 0..nn {
                    let mut acc = geo.pool.int(0);
                    for c in 0..nn {
                        let hac = frame.h.get(&[cap_a, c]);
                        let f = omega_up.get(&[a, b, c, cap_b]);
                        acc = geo.pool.mul_add(acc, hac, f);
                    }
                    omega.set(&[a, b, cap_a, cap_b], acc);
                }
            }
        }
    }
    omega
}

/// kappa^a Omega_ab..: contraction of the candidate field into the first
/// two-form slot, the isotropy residual.
pub fn kappa_insertion(
    geo: &mut Geometry,
    omega: &TensorField,
) -> TensorField {
    let n = geo.n();
    let nn = omega.shape()[2];
    let mut out = TensorField::zeros(&mut geo.pool, &[n, nn, nn]);
    for b in 0..n {
        for cap_a in 0..nn {
            for cap_b in 0..nn {
                let mut acc = geo.pool.int(0);
                for a in 0..n {
                    let k = geo.kappa.get(&[a]);
                    let w = omega.get(&[a, b, cap_a, cap_b]);
                    acc = geo.pool.mul_add(acc, k, w);
                }
                out.set(&[b, cap_a, cap_b], acc);
            }
        }
    }
    out
}

/// The X column of Omega (contraction with the upper X tractor); identically
/// zero in the formula route, a real check for the commutator route.
pub fn x_insertion(geo: &mut Geometry, frame: &TractorFrame, omega: &TensorField) -> TensorField {
    let n = geo.n();
    let nn = frame.dim();
    let x = frame.x_up_slot();
    let mut out = TensorField::zeros(&mut geo.pool, &[n, n, nn]);
    for a in 0..n {
        for b in 0..n {
            for cap_b in 0..nn {
                // Omega_abAB X^A has only the slot-x term
                out.set(&[a, b, cap_b], omega.get(&[a, b, x, cap_b]));
            }
        }
    }
    out
}
