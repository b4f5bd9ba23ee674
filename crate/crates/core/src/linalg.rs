//! Small dense helpers shared by the cocycle routines.
//!
//! Everything here works on `DMatrix<f64>` of modest size (the matrix
//! dimension of a cocycle rarely exceeds a handful), so clarity wins over
//! blocking or in-place tricks.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Relative threshold below which a Gram-Schmidt residual counts as an exact
/// zero pivot. A one-step contraction stronger than this cannot be told apart
/// from a rank drop in double precision.
pub const ZERO_PIVOT: f64 = 16.0 * f64::EPSILON;

pub struct Qr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl Qr {
    /// `ln |r_jj|`, with `-inf` for zero pivots.
    pub fn log_diag(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.r.ncols()).map(move |j| self.r[(j, j)].abs().ln())
    }
}

fn orthogonalize_against(v: &mut DVector<f64>, q: &DMatrix<f64>, upto: usize, coeffs: Option<&mut [f64]>) {
    let mut acc = vec![0.0; upto];
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for (p, a) in acc.iter_mut().enumerate() {
            let col = q.column(p);
            let c = col.dot(v);
            *a += c;
            v.axpy(-c, &col, 1.0);
        }
    }
    if let Some(out) = coeffs {
        out[..upto].copy_from_slice(&acc);
    }
}

/// Unit vector orthogonal to the first `upto` columns of `q`, chosen as the
/// standard basis vector with the largest residual.
fn completion_vector(q: &DMatrix<f64>, upto: usize) -> DVector<f64> {
    let d = q.nrows();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for t in 0..d {
        let mut e = DVector::zeros(d);
        e[t] = 1.0;
        orthogonalize_against(&mut e, q, upto, None);
        let n = e.norm();
        if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
            best = Some((n, e));
        }
    }
    let (n, e) = best.expect("ambient dimension is positive");
    e / n
}

/// Thin QR of a `d x k` matrix (`k <= d`) by modified Gram-Schmidt with
/// reorthogonalization. Columns whose residual drops below
/// `ZERO_PIVOT * max_column_norm` get `r_jj = 0` and a completion vector in
/// `Q`, so `Q` always has orthonormal columns.
pub fn qr(m: &DMatrix<f64>) -> Qr {
    let (d, k) = m.shape();
    assert!(k <= d, "qr expects at most as many columns as rows");
    let scale = (0..k).map(|j| m.column(j).norm()).fold(0.0, f64::max);
    let mut q = DMatrix::zeros(d, k);
    let mut r = DMatrix::zeros(k, k);
    let mut coeffs = vec![0.0; k];
    for j in 0..k {
        let mut v = m.column(j).clone_owned();
        orthogonalize_against(&mut v, &q, j, Some(&mut coeffs));
        for p in 0..j {
            r[(p, j)] = coeffs[p];
        }
        let nrm = v.norm();
        if scale > 0.0 && nrm > ZERO_PIVOT * scale {
            r[(j, j)] = nrm;
            q.set_column(j, &(v / nrm));
        } else {
            q.set_column(j, &completion_vector(&q, j));
        }
    }
    Qr { q, r }
}

/// Singular values in decreasing order. Empty matrices give an empty list.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a square or tall matrix (`0` for empty input).
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Spectral norm of a symmetric matrix via its eigenvalues.
pub fn symmetric_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.iter().fold(0.0, |acc: f64, e| acc.max(e.abs()))
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Fixed, generic orthogonal frame used to seed orthogonal iterations so that
/// no coordinate-aligned starting flag is accidentally invariant.
pub fn generic_frame(d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |i, j| {
        let t = ((i * 7 + j * 13 + 1) as f64 * 0.618_033_988_749_895).fract() - 0.5;
        t + if i == j { 0.25 } else { 0.0 }
    });
    qr(&m).q
}

/// A matrix product kept as `exp(log_scale) * mat` so long products neither
/// overflow nor underflow.
#[derive(Debug, Clone)]
pub struct ScaledProduct {
    mat: DMatrix<f64>,
    log_scale: f64,
}

impl ScaledProduct {
    pub fn identity(n: usize) -> Self {
        Self { mat: DMatrix::identity(n, n), log_scale: 0.0 }
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        let mut p = Self { mat: m, log_scale: 0.0 };
        p.renormalize();
        p
    }

    fn renormalize(&mut self) {
        let s = self.mat.amax();
        if s == 0.0 {
            self.log_scale = f64::NEG_INFINITY;
        } else if s.is_finite() && self.log_scale.is_finite() {
            self.mat /= s;
            self.log_scale += s.ln();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY
    }

    /// `self <- g * self`
    pub fn left_mul(&mut self, g: &DMatrix<f64>) {
        if self.is_zero() {
            return;
        }
        self.mat = g * &self.mat;
        self.renormalize();
    }

    /// `self <- self * g`
    pub fn right_mul(&mut self, g: &DMatrix<f64>) {
        if self.is_zero() {
            return;
        }
        self.mat = &self.mat * g;
        self.renormalize();
    }

    pub fn log_norm(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.log_scale + spectral_norm(&self.mat).ln()
    }

    pub fn log_min_singular(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.log_scale + min_singular_value(&self.mat).ln()
    }

    /// `ln ||self * c||` for a block of columns `c`.
    pub fn log_norm_applied(&self, c: &DMatrix<f64>) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.log_scale + spectral_norm(&(&self.mat * c)).ln()
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn normalized(&self) -> &DMatrix<f64> {
        &self.mat
    }
}
