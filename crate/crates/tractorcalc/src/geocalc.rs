//! Metric geometry on a coordinate chart.
//!
//! [`Geometry`] owns the expression pool, the metric, the candidate vector
//! field and the sampling box. [`Geometry::curvature`] builds the full
//! curvature stack symbolically: Christoffel symbols, Riemann in both index
//! positions, Ricci, scalar, Schouten, Weyl and Cotton, plus the symbolic
//! inverse metric by cofactor expansion. Index conventions, fixed once here
//! and relied on everywhere downstream:
//!
//! * `gamma[c,a,b]` = Gamma^c_ab, symmetric in (a,b)
//! * `riem[a,b,c,d]` = R_ab^c_d with [D_a, D_b] v^c = R_ab^c_d v^d
//! * `rlow[a,b,c,d]` = g_ce R_ab^e_d, antisymmetric in (a,b) and (c,d)
//! * `ric[b,d]` = R_ab^a_d; `scal` = g^bd Ric_bd
//! * `p[a,b]` = (Ric_ab - scal/(2(n-1)) g_ab)/(n-2); `j` = P^a_a
//! * `weyl[a,b,c,d]` = rlow - (g_ac P_bd + g_bd P_ac - g_ad P_bc - g_bc P_ad)
//! * `cotton[a,b,c]` = D_b P_ca - D_c P_ba, antisymmetric in (b,c)
//!
//! The covariant derivative of any tensor field prepends the derivative
//! index: `D[a, i...] = d_a T[i...] +/- Gamma corrections` per slot.

use crate::exprkit::{DomainError, EvalScratch, ExprId, Pool};
use crate::linalg::Mat;
use crate::rng::SplitMix64;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Dense tensor of expressions, row-major over its shape.
#[derive(Clone, Debug)]
pub struct TensorField {
    shape: Vec<usize>,
    data: Vec<ExprId>,
}

impl TensorField {
    pub fn zeros(pool: &mut Pool, shape: &[usize]) -> TensorField {
        let len = shape.iter().product();
        let zero = pool.int(0);
        TensorField {
            shape: shape.to_vec(),
            data: vec![zero; len],
        }
    }

    pub fn from_entries(shape: &[usize], data: Vec<ExprId>) -> TensorField {
        assert_eq!(shape.iter().product::<usize>(), data.len());
        TensorField {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn lin(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut l = 0;
        for (i, &k) in idx.iter().enumerate() {
            debug_assert!(k < self.shape[i]);
            l = l * self.shape[i] + k;
        }
        l
    }

    /// Decompose a linear position into a multi-index.
    pub fn unlin(&self, mut l: usize, out: &mut [usize]) {
        for i in (0..self.shape.len()).rev() {
            out[i] = l % self.shape[i];
            l /= self.shape[i];
        }
    }

    pub fn get(&self, idx: &[usize]) -> ExprId {
        self.data[self.lin(idx)]
    }

    pub fn set(&mut self, idx: &[usize], e: ExprId) {
        let l = self.lin(idx);
        self.data[l] = e;
    }

    pub fn entries(&self) -> &[ExprId] {
        &self.data
    }

    /// Evaluate every entry at a point, in storage order.
    pub fn eval(
        &self,
        pool: &Pool,
        scratch: &mut EvalScratch,
        point: &[f64],
    ) -> Result<Vec<f64>, DomainError> {
        self.data
            .iter()
            .map(|&e| scratch.eval(pool, e, point))
            .collect()
    }
}

/// Tensor index variance for covariant differentiation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Slot {
    Up,
    Low,
}

/// Which conformal scale the given metric represents.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Scale {
    Preferred,
    Unknown,
}

#[derive(Debug)]
pub enum GeoError {
    DimensionTooSmall(usize),
    BadShape(String),
    DegenerateMetric { point: Vec<f64>, detail: String },
    SignatureMismatch { point: Vec<f64>, detail: String },
    Eval { point: Vec<f64>, detail: String },
}

impl fmt::Display for GeoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeoError::DimensionTooSmall(n) => {
                write!(f, "chart dimension {n} is below 3; Schouten and Weyl need n >= 3")
            }
            GeoError::BadShape(s) => write!(f, "{s}"),
            GeoError::DegenerateMetric { point, detail } => {
                write!(f, "metric degenerates at {point:?}: {detail}")
            }
            GeoError::SignatureMismatch { point, detail } => {
                write!(f, "metric signature mismatch at {point:?}: {detail}")
            }
            GeoError::Eval { point, detail } => {
                write!(f, "evaluation failed at {point:?}: {detail}")
            }
        }
    }
}

/// A chart, metric, candidate field and sampling plan.
pub struct Geometry {
    pub pool: Pool,
    pub signature: Vec<i8>,
    pub g: TensorField,
    pub kappa: TensorField,
    pub domain: Vec<(f64, f64)>,
    pub samples: usize,
    pub seed: u64,
    pub scale: Scale,
    pub omega: Option<ExprId>,
}

/// Everything derived from the metric alone.
pub struct CurvatureBundle {
    pub gamma: TensorField,
    pub riem: TensorField,
    pub rlow: TensorField,
    pub ric: TensorField,
    pub scal: ExprId,
    pub p: TensorField,
    pub j: ExprId,
    pub weyl: TensorField,
    pub cotton: TensorField,
    pub ginv: TensorField,
    pub detg: ExprId,
}

/// Determinant by cofactor expansion along the first row; fine for the
/// handful of dimensions a chart has, and exact on rational entries.
fn det_expr(pool: &mut Pool, a: &[ExprId], n: usize) -> ExprId {
    if n == 1 {
        return a[0];
    }
    let mut acc = pool.int(0);
    let mut minor = vec![pool.int(0); (n - 1) * (n - 1)];
    for col in 0..n {
        for i in 1..n {
            let mut jj = 0;
            for j in 0..n {
                if j == col {
                    continue;
                }
                minor[(i - 1) * (n - 1) + jj] = a[i * n + j];
                jj += 1;
            }
        }
        let m = det_expr(pool, &minor, n - 1);
        let term = pool.mul(a[col], m);
        acc = if col % 2 == 0 {
            pool.add(acc, term)
        } else {
            pool.sub(acc, term)
        };
    }
    acc
}

impl Geometry {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pool: Pool,
        signature: Vec<i8>,
        g: TensorField,
        kappa: TensorField,
        domain: Vec<(f64, f64)>,
        samples: usize,
        seed: u64,
        scale: Scale,
        omega: Option<ExprId>,
    ) -> Result<Geometry, GeoError> {
        let n = pool.dim();
        if n < 3 {
            return Err(GeoError::DimensionTooSmall(n));
        }
        if signature.len() != n || signature.iter().any(|&s| s != 1 && s != -1) {
            return Err(GeoError::BadShape(format!(
                "signature must be {n} entries of +1/-1"
            )));
        }
        if g.shape() != [n, n] {
            return Err(GeoError::BadShape(format!("metric must be {n}x{n}")));
        }
        if kappa.shape() != [n] {
            return Err(GeoError::BadShape(format!(
                "candidate field must have {n} components"
            )));
        }
        if domain.len() != n || domain.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(GeoError::BadShape(String::from(
                "domain needs one nonempty interval per coordinate",
            )));
        }
        if samples == 0 {
            return Err(GeoError::BadShape(String::from("sample count must be positive")));
        }
        for a in 0..n {
            for b in 0..n {
                if g.get(&[a, b]) != g.get(&[b, a]) {
                    return Err(GeoError::BadShape(format!(
                        "metric entries ({a},{b}) and ({b},{a}) differ"
                    )));
                }
            }
        }
        Ok(Geometry {
            pool,
            signature,
            g,
            kappa,
            domain,
            samples,
            seed,
            scale,
            omega,
        })
    }

    pub fn n(&self) -> usize {
        self.pool.dim()
    }

    /// Deterministic interior sample points: the seeded stream, with each
    /// interval shrunk 5% per side to stay away from chart-boundary trouble.
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        let mut rng = SplitMix64::new(self.seed);
        (0..self.samples)
            .map(|_| {
                self.domain
                    .iter()
                    .map(|&(lo, hi)| {
                        let w = hi - lo;
                        rng.in_range(lo + 0.05 * w, hi - 0.05 * w)
                    })
                    .collect()
            })
            .collect()
    }

    /// Check invertibility and the eigenvalue sign pattern of g at every
    /// sample point.
    pub fn validate_metric(&mut self) -> Result<(), GeoError> {
        let n = self.n();
        let expect_neg = self.signature.iter().filter(|&&s| s < 0).count();
        let mut scratch = EvalScratch::new();
        for pt in self.sample_points() {
            scratch.begin(&self.pool);
            let vals = self
                .g
                .eval(&self.pool, &mut scratch, &pt)
                .map_err(|e| GeoError::Eval {
                    point: pt.clone(),
                    detail: format!("metric entry hit {:?}", e.kind),
                })?;
            let m = Mat::from_fn(n, n, |i, j| vals[i * n + j]);
            let ev = m.sym_eigenvalues();
            let top = ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if top == 0.0 || ev.iter().any(|v| v.abs() < 1e-10 * top) {
                return Err(GeoError::DegenerateMetric {
                    point: pt,
                    detail: format!("eigenvalues {ev:?}"),
                });
            }
            let neg = ev.iter().filter(|&&v| v < 0.0).count();
            if neg != expect_neg {
                return Err(GeoError::SignatureMismatch {
                    point: pt,
                    detail: format!("expected {expect_neg} negative eigenvalues, found {neg}"),
                });
            }
        }
        Ok(())
    }

    /// Symbolic inverse metric and determinant via adjugate over cofactors.
    fn inverse_metric(&mut self) -> (TensorField, ExprId) {
        let n = self.n();
        let det = det_expr(&mut self.pool, self.g.entries(), n);
        let mut ginv = TensorField::zeros(&mut self.pool, &[n, n]);
        let mut minor = vec![self.pool.int(0); (n - 1) * (n - 1)];
        for i in 0..n {
            for j in 0..n {
                let mut r = 0;
                for a in 0..n {
                    if a == i {
                        continue;
                    }
                    let mut c = 0;
                    for b in 0..n {
                        if b == j {
                            continue;
                        }
                        minor[r * (n - 1) + c] = self.g.get(&[a, b]);
                        c += 1;
                    }
                    r += 1;
                }
                let mut cof = det_expr(&mut self.pool, &minor, n - 1);
                if (i + j) % 2 == 1 {
                    cof = self.pool.neg(cof);
                }
                // adj^T / det; g symmetric so the transpose is cosmetic
                let entry = self.pool.div(cof, det);
                ginv.set(&[j, i], entry);
            }
        }
        (ginv, det)
    }

    pub fn curvature(&mut self) -> CurvatureBundle {
        let n = self.n();
        let (ginv, detg) = self.inverse_metric();

        // Gamma^c_ab = 1/2 g^cd (d_a g_db + d_b g_da - d_d g_ab)
        let mut gamma = TensorField::zeros(&mut self.pool, &[n, n, n]);
        for c in 0..n {
            for a in 0..n {
                for b in 0..a + 1 {
                    let mut acc = self.pool.int(0);
                    for d in 0..n {
                        let gdb = self.g.get(&[d, b]);
                        let gda = self.g.get(&[d, a]);
                        let gab = self.g.get(&[a, b]);
                        let t1 = self.pool.diff(gdb, a);
                        let t2 = self.pool.diff(gda, b);
                        let t3 = self.pool.diff(gab, d);
                        let s = self.pool.add(t1, t2);
                        let s = self.pool.sub(s, t3);
                        let gcd = ginv.get(&[c, d]);
                        acc = self.pool.mul_add(acc, gcd, s);
                    }
                    let half = self.pool.rat(1, 2);
                    let v = self.pool.mul(half, acc);
                    gamma.set(&[c, a, b], v);
                    gamma.set(&[c, b, a], v);
                }
            }
        }

        // R_ab^c_d = d_a Gamma^c_bd - d_b Gamma^c_ad
        //          + Gamma^c_ae Gamma^e_bd - Gamma^c_be Gamma^e_ad
        let mut riem = TensorField::zeros(&mut self.pool, &[n, n, n, n]);
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                for c in 0..n {
                    for d in 0..n {
                        let gbd = gamma.get(&[c, b, d]);
                        let gad = gamma.get(&[c, a, d]);
                        let mut acc = self.pool.diff(gbd, a);
                        let t = self.pool.diff(gad, b);
                        acc = self.pool.sub(acc, t);
                        for e in 0..n {
                            let cae = gamma.get(&[c, a, e]);
                            let ebd = gamma.get(&[e, b, d]);
                            acc = self.pool.mul_add(acc, cae, ebd);
                            let cbe = gamma.get(&[c, b, e]);
                            let ead = gamma.get(&[e, a, d]);
                            let t = self.pool.mul(cbe, ead);
                            acc = self.pool.sub(acc, t);
                        }
                        riem.set(&[a, b, c, d], acc);
                    }
                }
            }
        }

        // all-lower curvature and Ricci
        let mut rlow = TensorField::zeros(&mut self.pool, &[n, n, n, n]);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut acc = self.pool.int(0);
                        for e in 0..n {
                            let gce = self.g.get(&[c, e]);
                            let r = riem.get(&[a, b, e, d]);
                            acc = self.pool.mul_add(acc, gce, r);
                        }
                        rlow.set(&[a, b, c, d], acc);
                    }
                }
            }
        }
        let mut ric = TensorField::zeros(&mut self.pool, &[n, n]);
        for b in 0..n {
            for d in 0..n {
                let mut acc = self.pool.int(0);
                for a in 0..n {
                    let r = riem.get(&[a, b, a, d]);
                    acc = self.pool.add(acc, r);
                }
                ric.set(&[b, d], acc);
            }
        }
        let mut scal = self.pool.int(0);
        for b in 0..n {
            for d in 0..n {
                let gi = ginv.get(&[b, d]);
                let r = ric.get(&[b, d]);
                scal = self.pool.mul_add(scal, gi, r);
            }
        }

        // Schouten and its trace
        let nn = n as i64;
        let mut p = TensorField::zeros(&mut self.pool, &[n, n]);
        for a in 0..n {
            for b in 0..n {
                let r = ric.get(&[a, b]);
                let gab = self.g.get(&[a, b]);
                let coeff = self.pool.rat(1, 2 * (nn - 1));
                let sg = self.pool.mul(scal, gab);
                let t = self.pool.mul(coeff, sg);
                let num = self.pool.sub(r, t);
                let v = self.pool.scale_rat(1, nn - 2, num);
                p.set(&[a, b], v);
            }
        }
        let mut j = self.pool.int(0);
        for a in 0..n {
            for b in 0..n {
                let gi = ginv.get(&[a, b]);
                let pe = p.get(&[a, b]);
                j = self.pool.mul_add(j, gi, pe);
            }
        }

        // Weyl
        let mut weyl = TensorField::zeros(&mut self.pool, &[n, n, n, n]);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut acc = rlow.get(&[a, b, c, d]);
                        let gac = self.g.get(&[a, c]);
                        let pbd = p.get(&[b, d]);
                        let t = self.pool.mul(gac, pbd);
                        acc = self.pool.sub(acc, t);
                        let gbd = self.g.get(&[b, d]);
                        let pac = p.get(&[a, c]);
                        let t = self.pool.mul(gbd, pac);
                        acc = self.pool.sub(acc, t);
                        let gad = self.g.get(&[a, d]);
                        let pbc = p.get(&[b, c]);
                        let t = self.pool.mul(gad, pbc);
                        acc = self.pool.add(acc, t);
                        let gbc = self.g.get(&[b, c]);
                        let pad = p.get(&[a, d]);
                        let t = self.pool.mul(gbc, pad);
                        acc = self.pool.add(acc, t);
                        weyl.set(&[a, b, c, d], acc);
                    }
                }
            }
        }

        // Cotton A_abc = D_b P_ca - D_c P_ba, from the covariant derivative
        // of P (derivative index first: dp[x, y, z] = D_x P_yz)
        let bundle_for_dp = CurvatureBundle {
            gamma: gamma.clone(),
            riem: riem.clone(),
            rlow: rlow.clone(),
            ric: ric.clone(),
            scal,
            p: p.clone(),
            j,
            weyl: weyl.clone(),
            cotton: TensorField::zeros(&mut self.pool, &[n, n, n]),
            ginv: ginv.clone(),
            detg,
        };
        let dp = self.covariant_derivative(&bundle_for_dp, &p, &[Slot::Low, Slot::Low]);
        let mut cotton = TensorField::zeros(&mut self.pool, &[n, n, n]);
        for a in 0..n {
            for b in 0..n {
                for c in 0..b {
                    let x = dp.get(&[b, c, a]);
                    let y = dp.get(&[c, b, a]);
                    let v = self.pool.sub(x, y);
                    cotton.set(&[a, b, c], v);
                    let nv = self.pool.neg(v);
                    cotton.set(&[a, c, b], nv);
                }
            }
        }

        CurvatureBundle {
            gamma,
            riem,
            rlow,
            ric,
            scal,
            p,
            j,
            weyl,
            cotton,
            ginv,
            detg,
        }
    }

    /// Covariant derivative of a tensor field; the result has the derivative
    /// index first, then the original slots.
    pub fn covariant_derivative(
        &mut self,
        cur: &CurvatureBundle,
        field: &TensorField,
        slots: &[Slot],
    ) -> TensorField {
        let n = self.n();
        assert_eq!(field.rank(), slots.len());
        assert!(field.shape().iter().all(|&s| s == n));
        let mut out_shape = vec![n];
        out_shape.extend_from_slice(field.shape());
        let mut out = TensorField::zeros(&mut self.pool, &out_shape);
        let rank = field.rank();
        let mut idx = vec![0usize; rank];
        let mut shifted = vec![0usize; rank];
        let mut oidx = vec![0usize; rank + 1];
        for l in 0..field.len() {
            field.unlin(l, &mut idx);
            let t = field.get(&idx);
            for a in 0..n {
                let mut acc = self.pool.diff(t, a);
                for (k, &slot) in slots.iter().enumerate() {
                    for e in 0..n {
                        shifted.copy_from_slice(&idx);
                        shifted[k] = e;
                        let te = field.get(&shifted);
                        match slot {
                            Slot::Up => {
                                let gm = cur.gamma.get(&[idx[k], a, e]);
                                acc = self.pool.mul_add(acc, gm, te);
                            }
                            Slot::Low => {
                                let gm = cur.gamma.get(&[e, a, idx[k]]);
                                let t = self.pool.mul(gm, te);
                                acc = self.pool.sub(acc, t);
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

    /// Raise (with g^ab) or lower (with g_ab) one slot in place of its
    /// current variance. `slot` is the position in the index list.
    pub fn move_slot(
        &mut self,
        cur: &CurvatureBundle,
        field: &TensorField,
        slot: usize,
        to: Slot,
    ) -> TensorField {
        let n = self.n();
        let metric = match to {
            Slot::Low => &self.g,
            Slot::Up => &cur.ginv,
        };
        // clone the metric entries up front; they are ids, cheap
        let metric = metric.clone();
        let mut out = TensorField::zeros(&mut self.pool, field.shape());
        let rank = field.rank();
        let mut idx = vec![0usize; rank];
        let mut src = vec![0usize; rank];
        for l in 0..field.len() {
            field.unlin(l, &mut idx);
            let mut acc = self.pool.int(0);
            for e in 0..n {
                src.copy_from_slice(&idx);
                src[slot] = e;
                let m = metric.get(&[idx[slot], e]);
                let te = field.get(&src);
                acc = self.pool.mul_add(acc, m, te);
            }
            out.set(&idx, acc);
        }
        out
    }

    /// kappa with its index lowered.
    pub fn kappa_lower(&mut self, cur: &CurvatureBundle) -> TensorField {
        let kappa = self.kappa.clone();
        self.move_slot(cur, &kappa, 0, Slot::Low)
    }

    /// D_a kappa^a, the divergence in the Levi-Civita connection.
    pub fn div_kappa(&mut self, cur: &CurvatureBundle) -> ExprId {
        let n = self.n();
        let mut acc = self.pool.int(0);
        for a in 0..n {
            let k = self.kappa.get(&[a]);
            let d = self.pool.diff(k, a);
            acc = self.pool.add(acc, d);
            for e in 0..n {
                let gm = cur.gamma.get(&[a, a, e]);
                let ke = self.kappa.get(&[e]);
                acc = self.pool.mul_add(acc, gm, ke);
            }
        }
        acc
    }

    /// Conformal Killing residual L_kappa g_ab - (2/n) (div kappa) g_ab.
    pub fn conformal_killing_residual(&mut self, cur: &CurvatureBundle) -> TensorField {
        let n = self.n();
        let klow = self.kappa_lower(cur);
        let dk = self.covariant_derivative(cur, &klow, &[Slot::Low]);
        let div = self.div_kappa(cur);
        let mut out = TensorField::zeros(&mut self.pool, &[n, n]);
        for a in 0..n {
            for b in 0..a + 1 {
                let x = dk.get(&[a, b]);
                let y = dk.get(&[b, a]);
                let sym = self.pool.add(x, y);
                let gab = self.g.get(&[a, b]);
                let tr = self.pool.mul(div, gab);
                let tr = self.pool.scale_rat(2, n as i64, tr);
                let v = self.pool.sub(sym, tr);
                out.set(&[a, b], v);
                out.set(&[b, a], v);
            }
        }
        out
    }

    /// kappa^a C_abcd: the Weyl insertion that must vanish for the
    /// construction's hypotheses.
    pub fn insertion_weyl(&mut self, cur: &CurvatureBundle) -> TensorField {
        let n = self.n();
        let mut out = TensorField::zeros(&mut self.pool, &[n, n, n]);
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut acc = self.pool.int(0);
                    for a in 0..n {
                        let k = self.kappa.get(&[a]);
                        let w = cur.weyl.get(&[a, b, c, d]);
                        acc = self.pool.mul_add(acc, k, w);
                    }
                    out.set(&[b, c, d], acc);
                }
            }
        }
        out
    }

    /// kappa^a A_abc: the Cotton insertion hypothesis.
    pub fn insertion_cotton(&mut self, cur: &CurvatureBundle) -> TensorField {
        let n = self.n();
        let mut out = TensorField::zeros(&mut self.pool, &[n, n]);
        for b in 0..n {
            for c in 0..n {
                let mut acc = self.pool.int(0);
                for a in 0..n {
                    let k = self.kappa.get(&[a]);
                    let ct = cur.cotton.get(&[a, b, c]);
                    acc = self.pool.mul_add(acc, k, ct);
                }
                out.set(&[b, c], acc);
            }
        }
        out
    }

    /// D^c C_abcd - (n-3) A_dab, identically zero; kept as a cross-check of
    /// the whole curvature stack.
    pub fn weyl_divergence_residual(&mut self, cur: &CurvatureBundle) -> TensorField {
        let n = self.n();
        let dw = self.covariant_derivative(
            cur,
            &cur.weyl,
            &[Slot::Low, Slot::Low, Slot::Low, Slot::Low],
        );
        let mut out = TensorField::zeros(&mut self.pool, &[n, n, n]);
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    let mut acc = self.pool.int(0);
                    for e in 0..n {
                        for c in 0..n {
                            let gi = cur.ginv.get(&[e, c]);
                            let w = dw.get(&[e, a, b, c, d]);
                            acc = self.pool.mul_add(acc, gi, w);
                        }
                    }
                    let ct = cur.cotton.get(&[d, a, b]);
                    let t = self.pool.scale(n as i64 - 3, ct);
                    let v = self.pool.sub(acc, t);
                    out.set(&[a, b, d], v);
                }
            }
        }
        out
    }

    /// The same geometry under g -> exp(2 omega) g, with the scale demoted
    /// to unknown. kappa keeps its components: the vector field does not
    /// change, only the metric representing the conformal class.
    pub fn rescaled(&self, omega: ExprId) -> Geometry {
        let mut pool = self.pool.clone();
        let n = pool.dim();
        let two = pool.int(2);
        let e2w = {
            let t = pool.mul(two, omega);
            pool.exp(t)
        };
        let mut g = TensorField::zeros(&mut pool, &[n, n]);
        for a in 0..n {
            for b in 0..n {
                let gab = self.g.get(&[a, b]);
                let v = pool.mul(e2w, gab);
                g.set(&[a, b], v);
            }
        }
        Geometry {
            pool,
            signature: self.signature.clone(),
            g,
            kappa: self.kappa.clone(),
            domain: self.domain.clone(),
            samples: self.samples,
            seed: self.seed,
            scale: Scale::Unknown,
            omega: None,
        }
    }
}

/// Max |entry| of a tensor field over a set of points; any evaluation error
/// is surfaced with its point.
pub fn max_abs_over(
    pool: &Pool,
    field: &TensorField,
    points: &[Vec<f64>],
) -> Result<f64, GeoError> {
    let mut scratch = EvalScratch::new();
    let mut worst = 0.0f64;
    for pt in points {
        scratch.begin(pool);
        let vals = field.eval(pool, &mut scratch, pt).map_err(|e| GeoError::Eval {
            point: pt.clone(),
            detail: format!("{:?} while evaluating a residual entry", e.kind),
        })?;
        for v in vals {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}
