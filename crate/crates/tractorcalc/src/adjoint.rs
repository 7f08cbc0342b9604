//! The adjoint tractor attached to the candidate field.
//!
//! From kappa the splitting builds the tractor covector K_B with slots
//! (0, kappa_b, -(1/n) div kappa) and the two-index section
//!
//! ```text
//! s_AB = Y_A K_B + Z_A^a (D_a K)_B - (1/n) X_A ((box + J) K)_B
//! ```
//!
//! so the rows of s in the standard layout are literally K, the coupled
//! derivative of K, and the X row. Nothing here assumes kappa is conformal
//! Killing: every statement that would need it ("s is parallel", "s o s is
//! a constant multiple of the identity", "the trace of Omega against the
//! normalized s vanishes") is exposed as a residual for the caller to
//! measure. The one identity that holds for arbitrary kappa is the pairing
//!
//! ```text
//! Omega_abAB s^AB = -2 kappa^c A_cab + C_abcd D^c kappa^d
//! ```
//!
//! and [`omega_pairing`] reports both sides precisely so that their
//! difference can serve as a cross-check even on geometries where the value
//! itself is large.

use crate::exprkit::{DomainError, EvalScratch, ExprId, Pool};
use crate::geocalc::{CurvatureBundle, Geometry, Slot, TensorField};
use crate::linalg::Mat;
use crate::tol;
use crate::tractor::{coupled_derivative, CoupledSlot, TractorFrame};


/// K, s and the scalar invariants built from one candidate field. Immutable
/// once assembled; all members are symbolic over the geometry's pool.
pub struct AdjointSection {
    /// K_B, lower slots (0, kappa_b, -(1/n) div kappa).
    pub k: TensorField,
    /// s_AB, both slots lower; row 0 aliases K entry for entry.
    pub s: TensorField,
    /// D_a s_BC under the coupled connection, shape [n, N, N]. Vanishes
    /// exactly when s is parallel.
    pub ds: TensorField,
    /// div kappa in the Levi-Civita connection.
    pub div_kappa: ExprId,
    /// (1/n^2)(div kappa)^2 - kappa^a P_ab kappa^b - (1/n) kappa^a d_a div kappa.
    pub lambda: ExprId,
    /// The same scalar as the pairing K^B s_B{X-slot}; agreement with
    /// `lambda` pins the splitting against the closed form.
    pub lambda_pairing: ExprId,
    /// ell_b = -(1/(n-1)) (box kappa_b + J kappa_b - P_ab kappa^a).
    pub ell: TensorField,
}

/// Build the section. The X row divides by n and the ell field by n - 1,
/// both fine for n >= 3.
pub fn split(geo: &mut Geometry, cur: &CurvatureBundle, frame: &TractorFrame) -> AdjointSection {
    let n = geo.n();
    let nn = frame.dim();
    let klow = geo.kappa_lower(cur);
    let div = geo.div_kappa(cur);

    let mut k = TensorField::zeros(&mut geo.pool, &[nn]);
    for b in 0..n {
        k.set(&[1 + b], klow.get(&[b]));
    }
    let rho = geo.pool.scale_rat(-1, n as i64, div);
    k.set(&[n + 1], rho);

    let dk = coupled_derivative(geo, cur, frame, &k, &[CoupledSlot::TracLow]);
    let ddk = coupled_derivative(
        geo,
        cur,
        frame,
        &dk,
        &[CoupledSlot::Low, CoupledSlot::TracLow],
    );

    let mut s = TensorField::zeros(&mut geo.pool, &[nn, nn]);
    for cap in 0..nn {
        s.set(&[0, cap], k.get(&[cap]));
        for a in 0..n {
            s.set(&[1 + a, cap], dk.get(&[a, cap]));
        }
        // box K_B = g^{ab} (D_a D_b K)_B
        let mut boxed = geo.pool.int(0);
        for a in 0..n {
            for b in 0..n {
                let gi = cur.ginv.get(&[a, b]);
                let t = ddk.get(&[a, b, cap]);
                boxed = geo.pool.mul_add(boxed, gi, t);
            }
        }
        let jk = {
            let kc = k.get(&[cap]);
            geo.pool.mul(cur.j, kc)
        };
        let t = geo.pool.add(boxed, jk);
        let v = geo.pool.scale_rat(-1, n as i64, t);
        s.set(&[n + 1, cap], v);
    }

    let ds = coupled_derivative(
        geo,
        cur,
        frame,
        &s,
        &[CoupledSlot::TracLow, CoupledSlot::TracLow],
    );

    // closed form for the scalar
    let lambda = {
        let d2 = geo.pool.mul(div, div);
        let t1 = geo.pool.scale_rat(1, (n * n) as i64, d2);
        let mut kpk = geo.pool.int(0);
        for a in 0..n {
            for b in 0..n {
                let ka = geo.kappa.get(&[a]);
                let pab = cur.p.get(&[a, b]);
                let kb = geo.kappa.get(&[b]);
                let t = geo.pool.mul(pab, kb);
                let t = geo.pool.mul(ka, t);
                kpk = geo.pool.add(kpk, t);
            }
        }
        let mut kddiv = geo.pool.int(0);
        for a in 0..n {
            let ka = geo.kappa.get(&[a]);
            let dd = geo.pool.diff(div, a);
            kddiv = geo.pool.mul_add(kddiv, ka, dd);
        }
        let t3 = geo.pool.scale_rat(1, n as i64, kddiv);
        let t = geo.pool.sub(t1, kpk);
        geo.pool.sub(t, t3)
    };

    // the same scalar as K^B s_B{X}: K^0 = -(1/n) div, K^{1+a} = kappa^a
    let lambda_pairing = {
        let mut acc = {
            let s0 = s.get(&[0, n + 1]);
            geo.pool.mul(rho, s0)
        };
        for a in 0..n {
            let ka = geo.kappa.get(&[a]);
            let sa = s.get(&[1 + a, n + 1]);
            acc = geo.pool.mul_add(acc, ka, sa);
        }
        acc
    };

    // ell from the traced second-derivative identity
    let dklow = geo.covariant_derivative(cur, &klow, &[Slot::Low]);
    let ddklow = geo.covariant_derivative(cur, &dklow, &[Slot::Low, Slot::Low]);
    let mut ell = TensorField::zeros(&mut geo.pool, &[n]);
    for b in 0..n {
        let mut boxed = geo.pool.int(0);
        for d in 0..n {
            for a in 0..n {
                let gi = cur.ginv.get(&[d, a]);
                let t = ddklow.get(&[d, a, b]);
                boxed = geo.pool.mul_add(boxed, gi, t);
            }
        }
        let kb = klow.get(&[b]);
        let jk = geo.pool.mul(cur.j, kb);
        let mut pk = geo.pool.int(0);
        for a in 0..n {
            let pab = cur.p.get(&[a, b]);
            let ka = geo.kappa.get(&[a]);
            pk = geo.pool.mul_add(pk, pab, ka);
        }
        let t = geo.pool.add(boxed, jk);
        let t = geo.pool.sub(t, pk);
        let v = geo.pool.scale_rat(-1, n as i64 - 1, t);
        ell.set(&[b], v);
    }

    AdjointSection {
        k,
        s,
        ds,
        div_kappa: div,
        lambda,
        lambda_pairing,
        ell,
    }
}

/// s_AB + s_BA; zero exactly when kappa is conformal Killing.
pub fn skew_residual(geo: &mut Geometry, s: &TensorField) -> TensorField {
    let nn = s.shape()[0];
    let mut out = TensorField::zeros(&mut geo.pool, &[nn, nn]);
    for a in 0..nn {
        for b in 0..a + 1 {
            let x = s.get(&[a, b]);
            let y = s.get(&[b, a]);
            let v = geo.pool.add(x, y);
            out.set(&[a, b], v);
            out.set(&[b, a], v);
        }
    }
    out
}

/// Both sides of the pairing of the tractor curvature with s, plus their
/// difference. The difference vanishes for every metric and every kappa;
/// the common value vanishes only under the construction's hypotheses.
pub struct OmegaPairing {
    /// Omega_abAB s^AB per (a, b).
    pub contracted: TensorField,
    /// -2 kappa^c A_cab + C_abcd D^c kappa^d.
    pub reconstruction: TensorField,
    /// contracted - reconstruction.
    pub difference: TensorField,
}

pub fn omega_pairing(
    geo: &mut Geometry,
    cur: &CurvatureBundle,
    frame: &TractorFrame,
    omega: &TensorField,
    s: &TensorField,
) -> OmegaPairing {
    let n = geo.n();
    let nn = frame.dim();
    let sup = frame.move_tractor_slot(geo, s, 0, false);
    let sup = frame.move_tractor_slot(geo, &sup, 1, false);
    let mut contracted = TensorField::zeros(&mut geo.pool, &[n, n]);
    for a in 0..n {
        for b in 0..n {
            let mut acc = geo.pool.int(0);
            for cap_a in 0..nn {
                for cap_b in 0..nn {
                    let w = omega.get(&[a, b, cap_a, cap_b]);
                    let sv = sup.get(&[cap_a, cap_b]);
                    acc = geo.pool.mul_add(acc, w, sv);
                }
            }
            contracted.set(&[a, b], acc);
        }
    }

    let ic = geo.insertion_cotton(cur);
    let klow = geo.kappa_lower(cur);
    let dklow = geo.covariant_derivative(cur, &klow, &[Slot::Low]);
    let dkup = geo.move_slot(cur, &dklow, 0, Slot::Up);
    let dkup = geo.move_slot(cur, &dkup, 1, Slot::Up);
    let mut reconstruction = TensorField::zeros(&mut geo.pool, &[n, n]);
    let mut difference = TensorField::zeros(&mut geo.pool, &[n, n]);
    for a in 0..n {
        for b in 0..n {
            let mut acc = {
                let t = ic.get(&[a, b]);
                geo.pool.scale(-2, t)
            };
            for c in 0..n {
                for d in 0..n {
                    let w = cur.weyl.get(&[a, b, c, d]);
                    let dk = dkup.get(&[c, d]);
                    acc = geo.pool.mul_add(acc, w, dk);
                }
            }
            reconstruction.set(&[a, b], acc);
            let lhs = contracted.get(&[a, b]);
            let v = geo.pool.sub(lhs, acc);
            difference.set(&[a, b], v);
        }
    }

    OmegaPairing {
        contracted,
        reconstruction,
        difference,
    }
}

/// Omega_abAB D^a kappa^b, the gradient insertion that vanishes in a
/// preferred scale; shape [N, N].
pub fn gradient_insertion(
    geo: &mut Geometry,
    cur: &CurvatureBundle,
    omega: &TensorField,
) -> TensorField {
    let n = geo.n();
    let nn = omega.shape()[2];
    let klow = geo.kappa_lower(cur);
    let dklow = geo.covariant_derivative(cur, &klow, &[Slot::Low]);
    let dkup = geo.move_slot(cur, &dklow, 0, Slot::Up);
    let dkup = geo.move_slot(cur, &dkup, 1, Slot::Up);
    let mut out = TensorField::zeros(&mut geo.pool, &[nn, nn]);
    for cap_a in 0..nn {
        for cap_b in 0..nn {
            let mut acc = geo.pool.int(0);
            for a in 0..n {
                for b in 0..n {
                    let w = omega.get(&[a, b, cap_a, cap_b]);
                    let dk = dkup.get(&[a, b]);
                    acc = geo.pool.mul_add(acc, w, dk);
                }
            }
            out.set(&[cap_a, cap_b], acc);
        }
    }
    out
}

/// D_d D_a kappa_b + P_da kappa_b - P_db kappa_a + g_da ell_b - g_db ell_a.
/// Zero in a preferred scale whenever the construction's hypotheses hold;
/// ell is exactly the trace that makes the g^{da} contraction vanish, so a
/// nonzero residual lives entirely in the trace-free part.
pub fn ell_identity_residual(
    geo: &mut Geometry,
    cur: &CurvatureBundle,
    ell: &TensorField,
) -> TensorField {
    let n = geo.n();
    let klow = geo.kappa_lower(cur);
    let dklow = geo.covariant_derivative(cur, &klow, &[Slot::Low]);
    let ddklow = geo.covariant_derivative(cur, &dklow, &[Slot::Low, Slot::Low]);
    let mut out = TensorField::zeros(&mut geo.pool, &[n, n, n]);
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut acc = ddklow.get(&[d, a, b]);
                let pda = cur.p.get(&[d, a]);
                let kb = klow.get(&[b]);
                acc = geo.pool.mul_add(acc, pda, kb);
                let pdb = cur.p.get(&[d, b]);
                let ka = klow.get(&[a]);
                let t = geo.pool.mul(pdb, ka);
                acc = geo.pool.sub(acc, t);
                let gda = geo.g.get(&[d, a]);
                let eb = ell.get(&[b]);
                acc = geo.pool.mul_add(acc, gda, eb);
                let gdb = geo.g.get(&[d, b]);
                let ea = ell.get(&[a]);
                let t = geo.pool.mul(gdb, ea);
                acc = geo.pool.sub(acc, t);
                out.set(&[d, a, b], acc);
            }
        }
    }
    out
}

/// kappa^a P_ab kappa^b; for a Killing field lambda is minus this value.
pub fn kappa_p_kappa(geo: &mut Geometry, cur: &CurvatureBundle) -> ExprId {
    let n = geo.n();
    let mut acc = geo.pool.int(0);
    for a in 0..n {
        for b in 0..n {
            let ka = geo.kappa.get(&[a]);
            let pab = cur.p.get(&[a, b]);
            let kb = geo.kappa.get(&[b]);
            let t = geo.pool.mul(pab, kb);
            let t = geo.pool.mul(ka, t);
            acc = geo.pool.add(acc, t);
        }
    }
    acc
}

/// g_ab kappa^a kappa^b; the isotropy hypothesis is that this vanishes.
pub fn kappa_norm_sq(geo: &mut Geometry) -> ExprId {
    let n = geo.n();
    let mut acc = geo.pool.int(0);
    for a in 0..n {
        for b in 0..n {
            let gab = geo.g.get(&[a, b]);
            let ka = geo.kappa.get(&[a]);
            let kb = geo.kappa.get(&[b]);
            let t = geo.pool.mul(ka, kb);
            let t = geo.pool.mul(gab, t);
            acc = geo.pool.add(acc, t);
        }
    }
    acc
}

/// Pointwise facts about s o s as an endomorphism.
pub struct SSquaredSample {
    /// trace(s o s) / (n + 2).
    pub lambda_est: f64,
    /// max |s o s - lambda_est id|.
    pub tracefree_residual: f64,
    /// max |s o s| entry, before subtracting the trace part.
    pub max_abs: f64,
    /// Numerical kernel dimension of s at this point.
    pub kernel_dim: usize,
}

/// Evaluate s at one point and square it. The endomorphism is h^{AC} s_CB,
/// so its kernel agrees with the kernel of s_AB.
pub fn s_squared_at(
    pool: &Pool,
    scratch: &mut EvalScratch,
    frame: &TractorFrame,
    s: &TensorField,
    point: &[f64],
) -> Result<SSquaredSample, DomainError> {
    let nn = frame.dim();
    let endo = endo_at(pool, scratch, frame, s, point)?;
    let sq = endo.matmul(&endo);
    let mut tr = 0.0;
    for i in 0..nn {
        tr += sq.at(i, i);
    }
    let lambda_est = tr / nn as f64;
    let resid = sq.sub(&Mat::identity(nn).scale(lambda_est));
    Ok(SSquaredSample {
        lambda_est,
        tracefree_residual: resid.max_abs(),
        max_abs: sq.max_abs(),
        kernel_dim: endo.kernel_dim(tol::KERNEL_REL),
    })
}

/// Traces of the tractor curvature against the identity and against the
/// normalized section J = s / sqrt(-lambda_est). Not applicable (None)
/// unless lambda_est is negative beyond the algebraic tolerance.
pub struct ComplexTraceSample {
    /// max over (a, b) of |Omega_ab{}^A{}_A|.
    pub raw_trace: f64,
    /// max over (a, b) of |Omega_ab{}^A{}_B J^B{}_A|.
    pub j_trace: f64,
}

pub fn complex_trace_at(
    pool: &Pool,
    scratch: &mut EvalScratch,
    frame: &TractorFrame,
    omega: &TensorField,
    s: &TensorField,
    point: &[f64],
) -> Result<Option<ComplexTraceSample>, DomainError> {
    let n = frame.n();
    let nn = frame.dim();
    let endo = endo_at(pool, scratch, frame, s, point)?;
    let sq = endo.matmul(&endo);
    let mut tr = 0.0;
    for i in 0..nn {
        tr += sq.at(i, i);
    }
    let lambda_est = tr / nn as f64;
    if !(lambda_est < -tol::ALGEBRAIC) {
        return Ok(None);
    }
    let j = endo.scale(1.0 / libm::sqrt(-lambda_est));

    scratch.begin(pool);
    let mut hinv = Mat::zeros(nn, nn);
    for i in 0..nn {
        for k in 0..nn {
            let v = scratch.eval(pool, frame.hinv.get(&[i, k]), point)?;
            hinv.set(i, k, v);
        }
    }
    let mut raw = 0.0f64;
    let mut jt = 0.0f64;
    let mut low = Mat::zeros(nn, nn);
    for a in 0..n {
        for b in 0..n {
            for cap_a in 0..nn {
                for cap_b in 0..nn {
                    let v = scratch.eval(pool, omega.get(&[a, b, cap_a, cap_b]), point)?;
                    low.set(cap_a, cap_b, v);
                }
            }
            let mixed = hinv.matmul(&low);
            let mut t = 0.0;
            for i in 0..nn {
                t += mixed.at(i, i);
            }
            raw = raw.max(t.abs());
            let mj = mixed.matmul(&j);
            let mut t = 0.0;
            for i in 0..nn {
                t += mj.at(i, i);
            }
            jt = jt.max(t.abs());
        }
    }
    Ok(Some(ComplexTraceSample {
        raw_trace: raw,
        j_trace: jt,
    }))
}

/// The normalized complex-structure candidate J = s / sqrt(-lambda_est) as
/// an endomorphism at one point; None when lambda_est is not negative enough
/// for the normalization to mean anything.
pub fn normalized_j_at(
    pool: &Pool,
    scratch: &mut EvalScratch,
    frame: &TractorFrame,
    s: &TensorField,
    point: &[f64],
) -> Result<Option<Mat>, DomainError> {
    let nn = frame.dim();
    let endo = endo_at(pool, scratch, frame, s, point)?;
    let sq = endo.matmul(&endo);
    let mut tr = 0.0;
    for i in 0..nn {
        tr += sq.at(i, i);
    }
    let lambda_est = tr / nn as f64;
    if !(lambda_est < -tol::ALGEBRAIC) {
        return Ok(None);
    }
    Ok(Some(endo.scale(1.0 / libm::sqrt(-lambda_est))))
}

/// s with the first slot raised, evaluated at a point: h^{AC} s_CB.
fn endo_at(
    pool: &Pool,
    scratch: &mut EvalScratch,
    frame: &TractorFrame,
    s: &TensorField,
    point: &[f64],
) -> Result<Mat, DomainError> {
    let nn = frame.dim();
    scratch.begin(pool);
    let mut hinv = Mat::zeros(nn, nn);
    let mut sm = Mat::zeros(nn, nn);
    for i in 0..nn {
        for k in 0..nn {
            let v = scratch.eval(pool, frame.hinv.get(&[i, k]), point)?;
            hinv.set(i, k, v);
            let v = scratch.eval(pool, s.get(&[i, k]), point)?;
            sm.set(i, k, v);
        }
    }
    Ok(hinv.matmul(&sm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geocalc::Scale;

    fn flat4(kappa: impl FnOnce(&mut Pool) -> TensorField) -> (Geometry, CurvatureBundle) {
        let mut pool = Pool::new(["x", "y", "z", "t"]);
        let one = pool.int(1);
        let mone = pool.int(-1);
        let mut g = TensorField::zeros(&mut pool, &[4, 4]);
        for a in 0..3 {
            g.set(&[a, a], one);
        }
        g.set(&[3, 3], mone);
        let kappa = kappa(&mut pool);
        let mut geo = Geometry::new(
            pool,
            vec![1, 1, 1, -1],
            g,
            kappa,
            vec![(-1.0, 1.0); 4],
            8,
            7,
            Scale::Preferred,
            None,
        )
        .unwrap();
        geo.validate_metric().unwrap();
        let cur = geo.curvature();
        (geo, cur)
    }

    fn is_zero(pool: &Pool, field: &TensorField) -> bool {
        field
            .entries()
            .iter()
            .all(|&e| pool.const_val(e) == Some(0.0))
    }

    #[test]
    fn translation_gives_a_constant_parallel_section() {
        let (mut geo, cur) = flat4(|pool| {
            let one = pool.int(1);
            let zero = pool.int(0);
            TensorField::from_entries(&[4], vec![one, zero, zero, zero])
        });
        let frame = TractorFrame::build(&mut geo, &cur);
        let adj = split(&mut geo, &cur, &frame);
        // K = (0, kappa_b, 0) and the X row of s vanishes
        assert_eq!(geo.pool.const_val(adj.k.get(&[0])), Some(0.0));
        assert_eq!(geo.pool.const_val(adj.k.get(&[1])), Some(1.0));
        assert_eq!(geo.pool.const_val(adj.k.get(&[5])), Some(0.0));
        for cap in 0..6 {
            assert_eq!(geo.pool.const_val(adj.s.get(&[5, cap])), Some(0.0));
        }
        assert!(is_zero(&geo.pool, &adj.ds), "translation section drifts");
        assert_eq!(geo.pool.const_val(adj.lambda), Some(0.0));
        assert_eq!(geo.pool.const_val(adj.lambda_pairing), Some(0.0));
        // the Y row aliases K
        for cap in 0..6 {
            assert_eq!(adj.s.get(&[0, cap]), adj.k.get(&[cap]));
        }
    }

    #[test]
    fn dilation_is_parallel_with_unit_scalar() {
        let (mut geo, cur) = flat4(|pool| {
            let x = pool.coord(0);
            let y = pool.coord(1);
            let z = pool.coord(2);
            let t = pool.coord(3);
            TensorField::from_entries(&[4], vec![x, y, z, t])
        });
        let frame = TractorFrame::build(&mut geo, &cur);
        let adj = split(&mut geo, &cur, &frame);
        assert_eq!(geo.pool.const_val(adj.div_kappa), Some(4.0));
        // K = Z kappa - X
        assert_eq!(geo.pool.const_val(adj.k.get(&[5])), Some(-1.0));
        // folding does not kill every cross term symbolically; the residual
        // is still zero pointwise
        let pts = geo.sample_points();
        let worst = crate::geocalc::max_abs_over(&geo.pool, &adj.ds, &pts).unwrap();
        assert!(worst <= tol::ALGEBRAIC, "dilation section drifts: {worst}");
        assert_eq!(geo.pool.const_val(adj.lambda), Some(1.0));
        assert_eq!(geo.pool.const_val(adj.lambda_pairing), Some(1.0));
    }

    #[test]
    fn null_translation_is_nilpotent_of_rank_two() {
        let (mut geo, cur) = flat4(|pool| {
            let one = pool.int(1);
            let zero = pool.int(0);
            TensorField::from_entries(&[4], vec![one, zero, zero, one])
        });
        let frame = TractorFrame::build(&mut geo, &cur);
        let adj = split(&mut geo, &cur, &frame);
        assert!(is_zero(&geo.pool, &adj.ds));
        let mut scratch = EvalScratch::new();
        let pt = [0.3, -0.2, 0.5, 0.1];
        let sq = s_squared_at(&geo.pool, &mut scratch, &frame, &adj.s, &pt).unwrap();
        assert!(sq.lambda_est.abs() <= tol::ALGEBRAIC);
        assert!(sq.max_abs <= tol::ALGEBRAIC, "s o s != 0: {}", sq.max_abs);
        assert_eq!(sq.kernel_dim, 4, "nilpotent s should have rank 2");
        // the complex trace check must declare itself not applicable
        let omega = crate::tractor::curvature_formula(&mut geo, &cur);
        let ct = complex_trace_at(&geo.pool, &mut scratch, &frame, &omega, &adj.s, &pt).unwrap();
        assert!(ct.is_none());
    }

    #[test]
    fn non_killing_field_leaves_a_visible_residual() {
        let (mut geo, cur) = flat4(|pool| {
            let x = pool.coord(0);
            let zero = pool.int(0);
            let x2 = pool.mul(x, x);
            TensorField::from_entries(&[4], vec![zero, x2, zero, zero])
        });
        let frame = TractorFrame::build(&mut geo, &cur);
        let adj = split(&mut geo, &cur, &frame);
        let pts = geo.sample_points();
        let worst = crate::geocalc::max_abs_over(&geo.pool, &adj.ds, &pts).unwrap();
        assert!(worst > 1e-3, "x^2 d_y looked parallel: {worst}");
        let skew = skew_residual(&mut geo, &adj.s);
        let sk = crate::geocalc::max_abs_over(&geo.pool, &skew, &pts).unwrap();
        assert!(sk > 1e-3, "x^2 d_y looked conformal Killing: {sk}");
    }

    #[test]
    fn pairing_difference_vanishes_even_off_hypotheses() {
        // flat metric and a field that is not conformal Killing: both sides
        // of the pairing identity are zero here (C = A = 0), so exercise the
        // reconstruction path and the contraction path together.
        let (mut geo, cur) = flat4(|pool| {
            let x = pool.coord(0);
            let zero = pool.int(0);
            let x2 = pool.mul(x, x);
            TensorField::from_entries(&[4], vec![zero, x2, zero, zero])
        });
        let frame = TractorFrame::build(&mut geo, &cur);
        let adj = split(&mut geo, &cur, &frame);
        let omega = crate::tractor::curvature_formula(&mut geo, &cur);
        let pair = omega_pairing(&mut geo, &cur, &frame, &omega, &adj.s);
        assert!(is_zero(&geo.pool, &pair.contracted));
        assert!(is_zero(&geo.pool, &pair.reconstruction));
        assert!(is_zero(&geo.pool, &pair.difference));
    }

    #[test]
    fn ell_identity_closes_on_flat_examples() {
        // dilation: box kappa = 0, P = 0, so ell = 0 and the identity is
        // the statement that D D kappa = 0
        let (mut geo, cur) = flat4(|pool| {
            let x = pool.coord(0);
            let y = pool.coord(1);
            let z = pool.coord(2);
            let t = pool.coord(3);
            TensorField::from_entries(&[4], vec![x, y, z, t])
        });
        let frame = TractorFrame::build(&mut geo, &cur);
        let adj = split(&mut geo, &cur, &frame);
        assert!(is_zero(&geo.pool, &adj.ell));
        let res = ell_identity_residual(&mut geo, &cur, &adj.ell);
        assert!(is_zero(&geo.pool, &res));
        let _ = frame;
    }

    #[test]
    fn killing_scalar_matches_schouten_pairing() {
        // any Killing field has div kappa = 0, so lambda folds to the
        // Schouten pairing with the sign flipped; on flat space both are 0,
        // exercised symbolically
        let (mut geo, cur) = flat4(|pool| {
            let x = pool.coord(0);
            let y = pool.coord(1);
            let zero = pool.int(0);
            let my = pool.neg(y);
            TensorField::from_entries(&[4], vec![my, x, zero, zero])
        });
        let frame = TractorFrame::build(&mut geo, &cur);
        let adj = split(&mut geo, &cur, &frame);
        assert_eq!(geo.pool.const_val(adj.div_kappa), Some(0.0));
        let kpk = kappa_p_kappa(&mut geo, &cur);
        let diff = {
            let t = geo.pool.add(adj.lambda, kpk);
            t
        };
        assert_eq!(geo.pool.const_val(diff), Some(0.0));
        let _ = frame;
    }
}
