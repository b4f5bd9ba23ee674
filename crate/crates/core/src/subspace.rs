//! Linear subspaces of R^d stored as orthonormal bases.
//!
//! Projectors are derived on demand; repeated products of projectors lose
//! idempotence much faster than bases lose orthonormality.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg::{is_finite, symmetric_norm};

pub const DEFAULT_ORTHO_TOL: f64 = 1e-10;
/// Principal-angle cosines above `1 - INTERSECT_TOL` count as shared directions.
pub const INTERSECT_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
    ortho_tol: f64,
    // basis of the space this one was built as the orthogonal complement of
    complement_of: Option<Arc<DMatrix<f64>>>,
}

impl Subspace {
    /// Wraps a basis that is already orthonormal.
    pub fn new(basis: DMatrix<f64>, ortho_tol: f64) -> Result<Self> {
        if basis.nrows() == 0 {
            return Err(Error::InvalidArgument("ambient dimension must be positive".into()));
        }
        if !is_finite(&basis) {
            return Err(Error::NonFiniteInput);
        }
        let m = basis.ncols();
        let defect = (basis.transpose() * &basis - DMatrix::identity(m, m)).amax();
        if defect > ortho_tol {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(Self { basis, ortho_tol, complement_of: None })
    }

    pub fn zero(d: usize) -> Self {
        Self { basis: DMatrix::zeros(d, 0), ortho_tol: DEFAULT_ORTHO_TOL, complement_of: None }
    }

    pub fn full(d: usize) -> Self {
        Self { basis: DMatrix::identity(d, d), ortho_tol: DEFAULT_ORTHO_TOL, complement_of: None }
    }

    /// Span of a single vector (zero subspace for the zero vector).
    pub fn line(v: &DVector<f64>) -> Result<Self> {
        orthonormalize(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()), DEFAULT_ORTHO_TOL)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ortho_tol(&self) -> f64 {
        self.ortho_tol
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance_to(&self, v: &DVector<f64>) -> f64 {
        let coords = self.basis.transpose() * v;
        (v - &self.basis * coords).norm()
    }

    /// Image of the subspace under `a`, re-orthonormalized.
    pub fn image(&self, a: &DMatrix<f64>) -> Result<Self> {
        orthonormalize(&(a * &self.basis), self.ortho_tol)
    }
}

fn check_dims(v: &Subspace, w: &Subspace) -> Result<()> {
    if v.ambient_dim() != w.ambient_dim() {
        return Err(Error::DimensionMismatch(v.ambient_dim(), w.ambient_dim()));
    }
    Ok(())
}

/// Orthonormal basis of the column span. Columns whose residual after
/// orthogonalization falls below `tol` times the largest column norm are
/// dropped.
pub fn orthonormalize(vectors: &DMatrix<f64>, tol: f64) -> Result<Subspace> {
    let (d, k) = vectors.shape();
    if d == 0 {
        return Err(Error::InvalidArgument("ambient dimension must be positive".into()));
    }
    if !is_finite(vectors) {
        return Err(Error::NonFiniteInput);
    }
    let scale = (0..k).map(|j| vectors.column(j).norm()).fold(0.0, f64::max);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(k.min(d));
    for j in 0..k {
        if cols.len() == d {
            break;
        }
        let mut v = vectors.column(j).clone_owned();
        for _ in 0..2 {
            for q in &cols {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let n = v.norm();
        if scale > 0.0 && n > tol * scale {
            cols.push(v / n);
        }
    }
    let basis = if cols.is_empty() { DMatrix::zeros(d, 0) } else { DMatrix::from_columns(&cols) };
    Ok(Subspace { basis, ortho_tol: DEFAULT_ORTHO_TOL, complement_of: None })
}

pub fn projector(v: &Subspace) -> DMatrix<f64> {
    v.projector()
}

fn projector_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let pa = a * a.transpose();
    let pb = b * b.transpose();
    symmetric_norm(&(pa - pb))
}

/// `||P_V - P_W||` in the spectral norm.
///
/// Two complements are compared through the spaces they complement, which
/// makes `d(V^perp, W^perp) == d(V, W)` hold bit for bit.
pub fn subspace_distance(v: &Subspace, w: &Subspace) -> Result<f64> {
    check_dims(v, w)?;
    if let (Some(a), Some(b)) = (&v.complement_of, &w.complement_of) {
        return Ok(projector_gap(a, b));
    }
    Ok(projector_gap(&v.basis, &w.basis))
}

pub fn orthogonal_complement(v: &Subspace) -> Subspace {
    let d = v.ambient_dim();
    if let Some(orig) = &v.complement_of {
        return Subspace {
            basis: orig.as_ref().clone(),
            ortho_tol: v.ortho_tol,
            complement_of: Some(Arc::new(v.basis.clone())),
        };
    }
    let target = d - v.dim();
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(target);
    // pivoted Gram-Schmidt over the standard basis
    while chosen.len() < target {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for t in 0..d {
            let mut e = DVector::zeros(d);
            e[t] = 1.0;
            for _ in 0..2 {
                for q in v.basis.column_iter() {
                    let c = q.dot(&e);
                    e.axpy(-c, &q, 1.0);
                }
                for q in &chosen {
                    let c = q.dot(&e);
                    e.axpy(-c, q, 1.0);
                }
            }
            let n = e.norm();
            if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
                best = Some((n, e));
            }
        }
        let (n, e) = best.expect("ambient dimension is positive");
        chosen.push(e / n);
    }
    let basis = if chosen.is_empty() { DMatrix::zeros(d, 0) } else { DMatrix::from_columns(&chosen) };
    Subspace { basis, ortho_tol: v.ortho_tol, complement_of: Some(Arc::new(v.basis.clone())) }
}

/// Cosines of the principal angles with the matching principal vectors of `v`.
fn principal(v: &Subspace, w: &Subspace) -> (Vec<f64>, DMatrix<f64>) {
    let m = v.basis.transpose() * &w.basis;
    let svd = SVD::new(m, true, false);
    let u = svd.u.expect("requested U");
    (svd.singular_values.iter().copied().collect(), &v.basis * u)
}

pub fn intersect(v: &Subspace, w: &Subspace, tol: f64) -> Result<Subspace> {
    check_dims(v, w)?;
    let d = v.ambient_dim();
    if v.is_zero() || w.is_zero() {
        return Ok(Subspace::zero(d));
    }
    let (cosines, vecs) = principal(v, w);
    let keep: Vec<DVector<f64>> = cosines
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 1.0 - tol)
        .map(|(j, _)| vecs.column(j).clone_owned())
        .collect();
    if keep.is_empty() {
        return Ok(Subspace::zero(d));
    }
    orthonormalize(&DMatrix::from_columns(&keep), DEFAULT_ORTHO_TOL)
}

pub fn direct_sum(v: &Subspace, w: &Subspace) -> Result<Subspace> {
    check_dims(v, w)?;
    if v.is_zero() {
        return Ok(w.clone());
    }
    if w.is_zero() {
        return Ok(v.clone());
    }
    let common = intersect(v, w, INTERSECT_TOL)?;
    if !common.is_zero() {
        return Err(Error::NotTransverse(common.dim()));
    }
    let joined = DMatrix::from_fn(v.ambient_dim(), v.dim() + w.dim(), |i, j| {
        if j < v.dim() {
            v.basis[(i, j)]
        } else {
            w.basis[(i, j - v.dim())]
        }
    });
    let s = orthonormalize(&joined, DEFAULT_ORTHO_TOL)?;
    if s.dim() != v.dim() + w.dim() {
        return Err(Error::NotTransverse(v.dim() + w.dim() - s.dim()));
    }
    Ok(s)
}

/// Direct sum of a list of pairwise transverse spaces.
pub fn direct_sum_all<'a>(d: usize, spaces: impl IntoIterator<Item = &'a Subspace>) -> Result<Subspace> {
    spaces.into_iter().try_fold(Subspace::zero(d), |acc, s| direct_sum(&acc, s))
}

/// `inf ||v1 + v2||` over unit `v1 in V`, `v2 in W`, via `sqrt(2 - 2 sigma_max)`.
pub fn min_sum_gap(v: &Subspace, w: &Subspace) -> Result<f64> {
    check_dims(v, w)?;
    if v.is_zero() || w.is_zero() {
        return Err(Error::InvalidArgument("min_sum_gap needs two nonzero subspaces".into()));
    }
    let (cosines, _) = principal(v, w);
    let s = cosines.iter().copied().fold(0.0, f64::max);
    if s >= 1.0 - INTERSECT_TOL {
        return Err(Error::DegenerateIntersection(s));
    }
    Ok((2.0 - 2.0 * s).max(0.0).sqrt())
}
