//! Dense linear algebra for small matrices.
//!
//! Everything here runs on matrices of dimension at most a few dozen (metric
//! blocks, tractor frames, stacked vectorized holonomy logs), so the simple
//! O(n^3) classics are the right tools: partially pivoted LU for determinant
//! and inverse, cyclic Jacobi for symmetric eigenvalues, one-sided Jacobi for
//! singular values (accurate for the tiny ones that decide kernel ranks), and
//! the Mercator series for matrix logarithms of near-identity holonomies.

use crate::tol;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.at(i, j) + a * rhs.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) - rhs.at(i, j))
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.at(i, j) + rhs.at(i, j))
    }

    pub fn scale(&self, k: f64) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| k * self.at(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frob(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Determinant by partially pivoted LU.
    pub fn det(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a.at(i, k).abs() > a.at(piv, k).abs() {
                    piv = i;
                }
            }
            if a.at(piv, k) == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    let (x, y) = (a.at(k, j), a.at(piv, j));
                    a.set(k, j, y);
                    a.set(piv, j, x);
                }
                det = -det;
            }
            let p = a.at(k, k);
            det *= p;
            for i in k + 1..n {
                let f = a.at(i, k) / p;
                for j in k..n {
                    let v = a.at(i, j) - f * a.at(k, j);
                    a.set(i, j, v);
                }
            }
        }
        det
    }

    /// Inverse via Gauss-Jordan with partial pivoting; `None` when a pivot
    /// falls below 1e-13 of the matrix scale.
    pub fn inverse(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let scale = self.max_abs();
        if scale == 0.0 {
            return None;
        }
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a.at(i, k).abs() > a.at(piv, k).abs() {
                    piv = i;
                }
            }
            if a.at(piv, k).abs() < 1e-13 * scale {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    let (x, y) = (a.at(k, j), a.at(piv, j));
                    a.set(k, j, y);
                    a.set(piv, j, x);
                    let (x, y) = (inv.at(k, j), inv.at(piv, j));
                    inv.set(k, j, y);
                    inv.set(piv, j, x);
                }
            }
            let p = a.at(k, k);
            for j in 0..n {
                a.set(k, j, a.at(k, j) / p);
                inv.set(k, j, inv.at(k, j) / p);
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a.at(i, k);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = a.at(i, j) - f * a.at(k, j);
                    a.set(i, j, v);
                    let v = inv.at(i, j) - f * inv.at(k, j);
                    inv.set(i, j, v);
                }
            }
        }
        Some(inv)
    }

    /// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending. The
    /// input is symmetrized first; callers pass matrices that are symmetric
    /// up to rounding.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = Mat::from_fn(n, n, |i, j| 0.5 * (self.at(i, j) + self.at(j, i)));
        for _sweep in 0..64 {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in i + 1..n {
                    off = off.max(a.at(i, j).abs());
                }
            }
            if off < 1e-14 * (1.0 + a.max_abs()) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.at(p, q);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                    } else {
                        -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                    };
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.at(k, p);
                        let akq = a.at(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.at(p, k);
                        let aqk = a.at(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a.at(i, i)).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    /// Singular values, descending, by one-sided Jacobi (Hestenes). Accurate
    /// for small singular values, which is what kernel-rank decisions need.
    pub fn singular_values(&self) -> Vec<f64> {
        // orthogonalize columns; transpose first if that means fewer of them
        let mut a = if self.rows < self.cols {
            self.transpose()
        } else {
            self.clone()
        };
        let (m, n) = (a.rows, a.cols);
        for _sweep in 0..64 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for k in 0..m {
                        let x = a.at(k, p);
                        let y = a.at(k, q);
                        app += x * x;
                        aqq += y * y;
                        apq += x * y;
                    }
                    if apq.abs() <= 1e-15 * libm::sqrt(app * aqq) {
                        continue;
                    }
                    rotated = true;
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                    } else {
                        -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                    };
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = t * c;
                    for k in 0..m {
                        let x = a.at(k, p);
                        let y = a.at(k, q);
                        a.set(k, p, c * x - s * y);
                        a.set(k, q, s * x + c * y);
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n)
            .map(|j| {
                let mut s = 0.0;
                for k in 0..m {
                    s += a.at(k, j) * a.at(k, j);
                }
                libm::sqrt(s)
            })
            .collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        sv
    }

    /// Number of singular values below `rel` times the largest one.
    pub fn kernel_dim(&self, rel: f64) -> usize {
        let sv = self.singular_values();
        let top = sv.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return sv.len();
        }
        sv.iter().filter(|&&s| s < rel * top).count()
    }

    /// Matrix logarithm by the series log(id + E); `None` when ||E||_F
    /// exceeds the trust guard and the series may not represent the log.
    pub fn log_series(&self) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let e = self.sub(&Mat::identity(n));
        if e.frob() > tol::LOG_GUARD {
            return None;
        }
        let mut term = e.clone();
        let mut acc = e.scale(0.0);
        for k in 1..=80 {
            let signed = term.scale(if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64);
            acc = Mat::from_fn(n, n, |i, j| acc.at(i, j) + signed.at(i, j));
            if term.frob() < 1e-17 {
                break;
            }
            term = term.matmul(&e);
        }
        Some(acc)
    }
}

/// Determinant of a complex matrix given row-major (LU with partial
/// pivoting on |.|^2).
pub fn cdet(n: usize, data: &[Complex64]) -> Complex64 {
    assert_eq!(data.len(), n * n);
    let mut a: Vec<Complex64> = data.to_vec();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if a[i * n + k].norm_sqr() > a[piv * n + k].norm_sqr() {
                piv = i;
            }
        }
        if a[piv * n + k].norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let p = a[k * n + k];
        det *= p;
        for i in k + 1..n {
            let f = a[i * n + k] / p;
            for j in k..n {
                let v = a[i * n + j] - f * a[k * n + j];
                a[i * n + j] = v;
            }
        }
    }
    det
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
