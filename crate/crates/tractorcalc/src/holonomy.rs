//! Holonomy probes: parallel transport of the standard tractor frame around
//! closed loops.
//!
//! A loop is a closed chain of segments, each given by coordinate
//! expressions of a single parameter running over [0, 1]. Transport
//! integrates the frame equation
//!
//! ```text
//! dV^A/dt = velocity^a theta[a, E, A] V^E
//! ```
//!
//! with classical RK4; the columns of the result are the transported basis
//! tractors, so the matrix itself is the holonomy element of the loop. What
//! the element must satisfy (h-orthogonality always; commutation with J and
//! unit complex determinant when the adjoint section supplies a J) is
//! measured by [`assemble_report`], never assumed.
//!
//! The default family is a rectangle of side eps in every coordinate plane
//! through a base point, each with its half-size companion for the epsilon
//! scaling test, plus one composite loop; curvature makes a rectangle defect
//! grow like eps^2, so halving eps must divide the defect by about four.

use crate::exprkit::{DomainError, EvalScratch, ExprId, Pool};
use crate::linalg::{cdet, Mat};
use crate::tol;
use crate::tractor::TractorFrame;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// One smooth piece of a loop; `coords` and `vel` are expressions in the
/// loop set's single-parameter pool, `vel` being the exact derivative.
pub struct Segment {
    pub coords: Vec<ExprId>,
    pub vel: Vec<ExprId>,
}

pub struct Loop {
    pub label: String,
    pub segments: Vec<Segment>,
    /// Points at the loop this one is the half-size companion of.
    pub halved_of: Option<usize>,
}

/// A family of loops sharing one parameter pool, a base point and a step
/// count.
pub struct LoopSet {
    pub pool: Pool,
    pub base: Vec<f64>,
    pub steps: usize,
    pub loops: Vec<Loop>,
}

#[derive(Debug)]
pub enum LoopError {
    /// Consecutive segment endpoints do not meet.
    OpenCurve {
        loop_index: usize,
        segment: usize,
        gap: f64,
    },
    /// A point of the curve leaves the geometry's domain box.
    OutsideDomain {
        loop_index: usize,
        segment: usize,
        coord: usize,
        value: f64,
    },
    /// Transport was asked for with no integration steps.
    ZeroSteps,
    Eval(DomainError),
}

impl From<DomainError> for LoopError {
    fn from(e: DomainError) -> LoopError {
        LoopError::Eval(e)
    }
}

impl LoopSet {
    pub fn new(base: &[f64], steps: usize) -> LoopSet {
        LoopSet {
            pool: Pool::new(["t"]),
            base: base.to_vec(),
            steps,
            loops: Vec::new(),
        }
    }

    /// The default probe family: for every coordinate plane a rectangle of
    /// side `eps` and its half-size companion, plus the composite of the
    /// first two planes.
    pub fn rectangles(base: &[f64], eps: f64, steps: usize) -> LoopSet {
        let n = base.len();
        let mut set = LoopSet::new(base, steps);
        for i in 0..n {
            for j in i + 1..n {
                let full = set.push_rectangle(i, j, eps, None);
                set.push_rectangle(i, j, eps / 2.0, Some(full));
            }
        }
        if n >= 3 {
            set.push_composition((0, 1), (1, 2), eps);
        }
        set
    }

    /// A rectangle in the (i, j) coordinate plane anchored at the base
    /// point; returns its index.
    pub fn push_rectangle(
        &mut self,
        i: usize,
        j: usize,
        eps: f64,
        halved_of: Option<usize>,
    ) -> usize {
        let label = format!("rect({i},{j}) eps={eps}");
        let segments = self.rectangle_segments(i, j, eps);
        self.loops.push(Loop {
            label,
            segments,
            halved_of,
        });
        self.loops.len() - 1
    }

    /// Two rectangles traversed in sequence; both anchored at the base
    /// point, so the chain closes.
    pub fn push_composition(&mut self, p1: (usize, usize), p2: (usize, usize), eps: f64) -> usize {
        let label = format!(
            "rect({},{})*rect({},{}) eps={eps}",
            p1.0, p1.1, p2.0, p2.1
        );
        let mut segments = self.rectangle_segments(p1.0, p1.1, eps);
        segments.extend(self.rectangle_segments(p2.0, p2.1, eps));
        self.loops.push(Loop {
            label,
            segments,
            halved_of: None,
        });
        self.loops.len() - 1
    }

    fn rectangle_segments(&mut self, i: usize, j: usize, eps: f64) -> Vec<Segment> {
        assert!(i != j, "degenerate plane");
        let n = self.base.len();
        let mut origin = self.base.clone();
        let mut segments = Vec::new();
        for (c, sgn) in [(i, 1.0), (j, 1.0), (i, -1.0), (j, -1.0)] {
            let mut coords = Vec::with_capacity(n);
            let mut vel = Vec::with_capacity(n);
            for a in 0..n {
                let k0 = self.pool.dec(origin[a]);
                let e = if a == c {
                    let step = self.pool.dec(sgn * eps);
                    let t = self.pool.coord(0);
                    let lin = self.pool.mul(step, t);
                    self.pool.add(k0, lin)
                } else {
                    k0
                };
                coords.push(e);
                vel.push(self.pool.diff(e, 0));
            }
            segments.push(Segment { coords, vel });
            origin[c] += sgn * eps;
        }
        segments
    }

    /// Endpoint closure of every chain and containment in the domain box,
    /// the latter sampled on a fixed grid per segment.
    pub fn validate(&self, domain: &[(f64, f64)]) -> Result<(), LoopError> {
        let mut scratch = EvalScratch::new();
        let n = self.base.len();
        for (li, lp) in self.loops.iter().enumerate() {
            let mut prev = self.base.clone();
            for (si, seg) in lp.segments.iter().enumerate() {
                // one begin per parameter value: the scratch memoizes per point
                scratch.begin(&self.pool);
                for a in 0..n {
                    let start = scratch.eval(&self.pool, seg.coords[a], &[0.0])?;
                    let gap = (start - prev[a]).abs();
                    if gap > 1e-12 {
                        return Err(LoopError::OpenCurve {
                            loop_index: li,
                            segment: si,
                            gap,
                        });
                    }
                }
                for k in 0..=32 {
                    let t = k as f64 / 32.0;
                    scratch.begin(&self.pool);
                    for a in 0..n {
                        let v = scratch.eval(&self.pool, seg.coords[a], &[t])?;
                        let (lo, hi) = domain[a];
                        if v < lo - 1e-9 || v > hi + 1e-9 {
                            return Err(LoopError::OutsideDomain {
                                loop_index: li,
                                segment: si,
                                coord: a,
                                value: v,
                            });
                        }
                    }
                }
                scratch.begin(&self.pool);
                for a in 0..n {
                    prev[a] = scratch.eval(&self.pool, seg.coords[a], &[1.0])?;
                }
            }
            for a in 0..n {
                let gap = (prev[a] - self.base[a]).abs();
                if gap > 1e-12 {
                    return Err(LoopError::OpenCurve {
                        loop_index: li,
                        segment: lp.segments.len(),
                        gap,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Transport the frame around one loop of the set. `steps` from the set is
/// the budget for the whole loop, split evenly over its segments.
pub fn transport(
    pool: &Pool,
    frame: &TractorFrame,
    set: &LoopSet,
    which: usize,
    domain: &[(f64, f64)],
) -> Result<Mat, LoopError> {
    if set.steps == 0 {
        return Err(LoopError::ZeroSteps);
    }
    let n = frame.n();
    let nn = frame.dim();
    let lp = &set.loops[which];
    let per = (set.steps / lp.segments.len()).max(1);
    let dt = 1.0 / per as f64;
    let mut tscratch = EvalScratch::new();
    let mut scratch = EvalScratch::new();
    let mut h = Mat::identity(nn);
    let mut pos = vec![0.0f64; n];
    let mut vel = vec![0.0f64; n];

    // M(t)[A][E] = vel^a theta[a, E, A] evaluated at the curve point
    let station = |tscratch: &mut EvalScratch,
                       scratch: &mut EvalScratch,
                       seg: &Segment,
                       t: f64,
                       pos: &mut [f64],
                       vel: &mut [f64]|
     -> Result<Mat, LoopError> {
        tscratch.begin(&set.pool);
        for a in 0..n {
            pos[a] = tscratch.eval(&set.pool, seg.coords[a], &[t])?;
            vel[a] = tscratch.eval(&set.pool, seg.vel[a], &[t])?;
            let (lo, hi) = domain[a];
            if pos[a] < lo - 1e-9 || pos[a] > hi + 1e-9 {
                return Err(LoopError::OutsideDomain {
                    loop_index: which,
                    segment: usize::MAX,
                    coord: a,
                    value: pos[a],
                });
            }
        }
        scratch.begin(pool);
        let mut m = Mat::zeros(nn, nn);
        for a in 0..n {
            // rectangle segments move one coordinate; skip the silent ones
            if vel[a] == 0.0 {
                continue;
            }
            for cap_e in 0..nn {
                for cap_a in 0..nn {
                    let th = scratch.eval(pool, frame.theta.get(&[a, cap_e, cap_a]), pos)?;
                    let v = m.at(cap_a, cap_e) + vel[a] * th;
                    m.set(cap_a, cap_e, v);
                }
            }
        }
        Ok(m)
    };

    for seg in &lp.segments {
        let mut m0 = station(&mut tscratch, &mut scratch, seg, 0.0, &mut pos, &mut vel)?;
        for k in 0..per {
            let tm = (k as f64 + 0.5) * dt;
            let t1 = (k as f64 + 1.0) * dt;
            let mm = station(&mut tscratch, &mut scratch, seg, tm, &mut pos, &mut vel)?;
            let m1 = station(&mut tscratch, &mut scratch, seg, t1, &mut pos, &mut vel)?;
            let k1 = m0.matmul(&h);
            let k2 = mm.matmul(&h.add(&k1.scale(0.5 * dt)));
            let k3 = mm.matmul(&h.add(&k2.scale(0.5 * dt)));
            let k4 = m1.matmul(&h.add(&k3.scale(dt)));
            let inc = k1.add(&k4).add(&k2.scale(2.0)).add(&k3.scale(2.0));
            h = h.add(&inc.scale(dt / 6.0));
            m0 = m1;
        }
    }
    Ok(h)
}

/// Residuals of one transported element.
pub struct LoopReport {
    pub label: String,
    /// max |H - id|.
    pub deviation: f64,
    /// max |H^T h H - h| with h frozen at the base point.
    pub metric_residual: f64,
    /// max |H J - J H| when a J was supplied.
    pub j_commutator: Option<f64>,
    /// |det_C(H) - 1| in a J-adapted basis.
    pub det_defect: Option<f64>,
}

pub struct Ratio {
    pub label: String,
    pub full: f64,
    pub half: f64,
    /// None when the full-size defect sits below the noise floor.
    pub ratio: Option<f64>,
}

pub struct HolonomyReport {
    pub loops: Vec<LoopReport>,
    pub ratios: Vec<Ratio>,
    /// Rank of the span of the matrix logs; a lower bound for the holonomy
    /// algebra dimension, from finitely many loops.
    pub algebra_dim: usize,
    /// Elements whose deviation exceeded the log guard and were left out of
    /// the rank estimate.
    pub skipped_logs: usize,
}

/// Measure every element against the frozen tractor metric and the optional
/// complex structure, pair up the epsilon halvings, and estimate the span
/// of the logs.
pub fn assemble_report(
    set: &LoopSet,
    elements: &[Mat],
    h0: &Mat,
    jbase: Option<&Mat>,
) -> HolonomyReport {
    assert_eq!(elements.len(), set.loops.len());
    let nn = h0.data().len().isqrt();
    let id = Mat::identity(nn);
    let mut loops = Vec::with_capacity(elements.len());
    let mut logs: Vec<Mat> = Vec::new();
    let mut skipped = 0usize;
    for (lp, h) in set.loops.iter().zip(elements) {
        let deviation = h.sub(&id).max_abs();
        let metric_residual = h.transpose().matmul(h0).matmul(h).sub(h0).max_abs();
        let (j_commutator, det_defect) = match jbase {
            Some(j) => {
                let comm = h.matmul(j).sub(&j.matmul(h)).max_abs();
                (Some(comm), complex_det_defect(h, j))
            }
            None => (None, None),
        };
        // half-size companions only serve the ratio test; as log directions
        // they duplicate their parent up to higher-order drift and would
        // inflate the rank
        if deviation > tol::LOOP_FLOOR && lp.halved_of.is_none() {
            match h.log_series() {
                Some(l) => logs.push(l),
                None => skipped += 1,
            }
        }
        loops.push(LoopReport {
            label: lp.label.clone(),
            deviation,
            metric_residual,
            j_commutator,
            det_defect,
        });
    }

    let mut ratios = Vec::new();
    for (i, lp) in set.loops.iter().enumerate() {
        let Some(parent) = lp.halved_of else { continue };
        let full = loops[parent].deviation;
        let half = loops[i].deviation;
        let ratio = if full > tol::LOOP_FLOOR && half > 0.0 {
            Some(full / half)
        } else {
            None
        };
        ratios.push(Ratio {
            label: set.loops[parent].label.clone(),
            full,
            half,
            ratio,
        });
    }

    let algebra_dim = if logs.is_empty() {
        0
    } else {
        let mut stack = Mat::zeros(logs.len(), nn * nn);
        for (r, l) in logs.iter().enumerate() {
            for (c, v) in l.data().iter().enumerate() {
                stack.set(r, c, *v);
            }
        }
        let sv = stack.singular_values();
        let top = sv[0];
        sv.iter().filter(|&&s| s > tol::LOG_RANK_REL * top).count()
    };

    HolonomyReport {
        loops,
        ratios,
        algebra_dim,
        skipped_logs: skipped,
    }
}

/// |det_C(H) - 1| for H read as a complex matrix in a basis of (v, Jv)
/// pairs. None when J fails to square to -id, when the pairing does not
/// exhaust the space, or when the basis is numerically singular.
pub fn complex_det_defect(h: &Mat, j: &Mat) -> Option<f64> {
    let nn = h.data().len().isqrt();
    if nn % 2 != 0 {
        return None;
    }
    let jj = j.matmul(j).sub(&Mat::identity(nn).scale(-1.0));
    if jj.max_abs() > 1e-6 {
        return None;
    }
    // greedy (v, Jv) pairing; independence tracked by Gram-Schmidt in the
    // plain euclidean sense, which is all a basis needs
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let push = |w: Vec<f64>, ortho: &mut Vec<Vec<f64>>| -> bool {
        let mut r = w.clone();
        for q in ortho.iter() {
            let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            for (x, y) in r.iter_mut().zip(q) {
                *x -= dot * y;
            }
        }
        let norm: f64 = libm::sqrt(r.iter().map(|x| x * x).sum());
        if norm < 1e-8 {
            return false;
        }
        for x in r.iter_mut() {
            *x /= norm;
        }
        ortho.push(r);
        true
    };
    for k in 0..nn {
        if basis.len() == nn {
            break;
        }
        let mut e = vec![0.0; nn];
        e[k] = 1.0;
        if !push(e.clone(), &mut ortho) {
            continue;
        }
        let je: Vec<f64> = (0..nn).map(|r| j.at(r, k)).collect();
        if !push(je.clone(), &mut ortho) {
            // J e landed in the span: cannot happen for J^2 = -id unless
            // numerics are broken; bail out
            return None;
        }
        basis.push(e);
        basis.push(je);
    }
    if basis.len() != nn {
        return None;
    }
    let b = Mat::from_fn(nn, nn, |r, c| basis[c][r]);
    let binv = b.inverse()?;
    let hb = binv.matmul(h).matmul(&b);
    let m = nn / 2;
    let mut data = Vec::with_capacity(m * m);
    for p in 0..m {
        for q in 0..m {
            data.push(Complex64::new(hb.at(2 * p, 2 * q), hb.at(2 * p + 1, 2 * q)));
        }
    }
    let det = cdet(m, &data);
    Some(libm::sqrt((det - Complex64::new(1.0, 0.0)).norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geocalc::{Geometry, Scale, TensorField};

    fn flat4() -> (Geometry, TractorFrame) {
        let mut pool = Pool::new(["x", "y", "z", "t"]);
        let one = pool.int(1);
        let mone = pool.int(-1);
        let zero = pool.int(0);
        let mut g = TensorField::zeros(&mut pool, &[4, 4]);
        for a in 0..3 {
            g.set(&[a, a], one);
        }
        g.set(&[3, 3], mone);
        let kappa = TensorField::from_entries(&[4], vec![one, zero, zero, one]);
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
        let cur = geo.curvature();
        let frame = TractorFrame::build(&mut geo, &cur);
        (geo, frame)
    }

    #[test]
    fn flat_loops_have_trivial_holonomy() {
        let (geo, frame) = flat4();
        let set = LoopSet::rectangles(&[0.0; 4], 0.3, 400);
        set.validate(&geo.domain).unwrap();
        let id = Mat::identity(6);
        for which in 0..set.loops.len() {
            let h = transport(&geo.pool, &frame, &set, which, &geo.domain).unwrap();
            let dev = h.sub(&id).max_abs();
            assert!(dev <= 1e-9, "{}: {dev}", set.loops[which].label);
        }
    }

    #[test]
    fn flat_report_sees_no_algebra() {
        let (geo, frame) = flat4();
        let set = LoopSet::rectangles(&[0.0; 4], 0.3, 200);
        let els: Vec<Mat> = (0..set.loops.len())
            .map(|w| transport(&geo.pool, &frame, &set, w, &geo.domain).unwrap())
            .collect();
        let mut scratch = EvalScratch::new();
        scratch.begin(&geo.pool);
        let h0 = Mat::from_fn(6, 6, |i, k| {
            scratch
                .eval(&geo.pool, frame.h.get(&[i, k]), &[0.0; 4])
                .unwrap()
        });
        let rep = assemble_report(&set, &els, &h0, None);
        assert_eq!(rep.algebra_dim, 0);
        assert_eq!(rep.skipped_logs, 0);
        for lr in &rep.loops {
            assert!(lr.metric_residual <= tol::ODE);
            assert!(lr.j_commutator.is_none());
        }
        for r in &rep.ratios {
            assert!(r.ratio.is_none(), "noise-level loop got a ratio");
        }
    }

    #[test]
    fn open_and_escaping_loops_are_rejected() {
        let (geo, _) = flat4();
        let mut set = LoopSet::new(&[0.0; 4], 100);
        set.push_rectangle(0, 1, 0.2, None);
        // break the last segment by hand: shift its constant y offset
        let bad = set.pool.dec(0.5);
        let li = set.loops.len() - 1;
        set.loops[li].segments[3].coords[1] = bad;
        match set.validate(&geo.domain) {
            Err(LoopError::OpenCurve { segment: 3, .. }) => {}
            other => panic!("wanted OpenCurve, got {other:?}"),
        }

        let mut set = LoopSet::new(&[0.9, 0.0, 0.0, 0.0], 100);
        set.push_rectangle(0, 1, 0.5, None);
        match set.validate(&geo.domain) {
            Err(LoopError::OutsideDomain { coord: 0, .. }) => {}
            other => panic!("wanted OutsideDomain, got {other:?}"),
        }
    }

    #[test]
    fn zero_steps_is_an_error() {
        let (geo, frame) = flat4();
        let set = LoopSet::rectangles(&[0.0; 4], 0.1, 0);
        match transport(&geo.pool, &frame, &set, 0, &geo.domain) {
            Err(LoopError::ZeroSteps) => {}
            other => panic!("wanted ZeroSteps, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn complex_det_tracks_block_rotations() {
        // J = standard symplectic on R^4; H = rotation by t in the first
        // (v, Jv) plane and by -t in the second: complex det e^{it} e^{-it}
        let mut j = Mat::zeros(4, 4);
        j.set(1, 0, 1.0);
        j.set(0, 1, -1.0);
        j.set(3, 2, 1.0);
        j.set(2, 3, -1.0);
        let t = 0.37f64;
        let rot = |m: &mut Mat, off: usize, ang: f64| {
            m.set(off, off, libm::cos(ang));
            m.set(off, off + 1, -libm::sin(ang));
            m.set(off + 1, off, libm::sin(ang));
            m.set(off + 1, off + 1, libm::cos(ang));
        };
        let mut h = Mat::zeros(4, 4);
        rot(&mut h, 0, t);
        rot(&mut h, 2, -t);
        let d = complex_det_defect(&h, &j).unwrap();
        assert!(d <= 1e-12, "special unitary rotation: {d}");

        let mut h = Mat::zeros(4, 4);
        rot(&mut h, 0, t);
        rot(&mut h, 2, t);
        let d = complex_det_defect(&h, &j).unwrap();
        let e2it = Complex64::new(libm::cos(2.0 * t), libm::sin(2.0 * t));
        let expect = libm::sqrt((e2it - Complex64::new(1.0, 0.0)).norm_sqr());
        assert!((d - expect).abs() <= 1e-12, "{d} vs {expect}");

        // a J that does not square to -id is refused
        let broken = Mat::identity(4);
        assert!(complex_det_defect(&h, &broken).is_none());
    }
}
