//! Lyapunov spectrum and Oseledets splitting.
//!
//! Exponents come from a forward QR (Benettin) run. The slow filtration
//! `V_{<=i}(x)` comes from an orthogonal iteration on the transposed product
//! `A(x,n)^T`, which only needs the forward orbit. The fast sums come from
//! the adjoint cocycle: the complement of its slow filtration at `x` is the
//! span of the leading columns of a forward QR run along the backward orbit,
//! so no matrix is ever inverted and singular generators are fine.

use nalgebra::{DMatrix, DVector};

use crate::cocycle::{CocycleSystem, Point};
use crate::error::{Error, Result};
use crate::linalg::{generic_frame, qr, ZERO_PIVOT};
use crate::subspace::{direct_sum_all, intersect, orthonormalize, subspace_distance, Subspace, DEFAULT_ORTHO_TOL, INTERSECT_TOL};

pub const DEFAULT_CLUSTER_TOL: f64 = 0.05;
pub const DEFAULT_NEG_INF_FLOOR: f64 = -30.0;
pub const MIN_HORIZON: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Distinct exponents in increasing order; only the first may be `-inf`.
    pub exponents: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub horizon: usize,
    /// Smallest gap between adjacent exponents (`inf` when there is at most
    /// one finite exponent).
    pub cluster_gap: f64,
    /// The `d` finite-time rates, increasing.
    pub per_step_rates: Vec<f64>,
}

impl SpectrumReport {
    pub fn k(&self) -> usize {
        self.exponents.len()
    }

    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// `dim V_{<=i}`, i.e. the sum of the first `i` multiplicities.
    pub fn cumulative(&self, i: usize) -> usize {
        self.multiplicities[..i].iter().sum()
    }

    pub fn top(&self) -> f64 {
        *self.exponents.last().expect("spectrum is nonempty")
    }

    /// Exponent `i` (1-based) with `-inf` replaced by a finite stand-in below
    /// the next exponent.
    pub fn finite_exponent(&self, i: usize) -> f64 {
        let l = self.exponents[i - 1];
        if l == f64::NEG_INFINITY {
            self.exponents.get(1).map_or(DEFAULT_NEG_INF_FLOOR, |l2| l2 - 5.0)
        } else {
            l
        }
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon < MIN_HORIZON {
        return Err(Error::InvalidArgument(format!("horizon must be at least {MIN_HORIZON}")));
    }
    Ok(())
}

/// Finite-time rates `(1/n) log |r_jj|` of a forward QR run from the identity,
/// in the order of the QR columns.
pub fn finite_time_rates(sys: &CocycleSystem, x: &[f64], horizon: usize) -> Vec<f64> {
    let d = sys.dim();
    let mut q = DMatrix::identity(d, d);
    let mut sums = vec![0.0; d];
    let mut p = x.to_vec();
    for _ in 0..horizon {
        let f = qr(&(sys.a(&p) * &q));
        for (s, l) in sums.iter_mut().zip(f.log_diag()) {
            *s += l;
        }
        q = f.q;
        p = sys.forward(&p);
    }
    sums.iter().map(|s| s / horizon as f64).collect()
}

/// Single-linkage clustering of finite-time rates.
pub fn cluster_rates(rates: &[f64], horizon: usize, cluster_tol: f64, neg_inf_floor: f64) -> Result<SpectrumReport> {
    let mut r: Vec<f64> = rates.iter().map(|&v| if v < neg_inf_floor { f64::NEG_INFINITY } else { v }).collect();
    r.sort_by(|a, b| a.total_cmp(b));
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &v in &r {
        match groups.last_mut() {
            Some(g) if g[0] == f64::NEG_INFINITY && v == f64::NEG_INFINITY => g.push(v),
            Some(g) if g[0] != f64::NEG_INFINITY => {
                let gap = v - g.last().unwrap();
                if gap < cluster_tol {
                    g.push(v);
                } else if gap < 2.0 * cluster_tol {
                    return Err(Error::ClusterAmbiguity { gap, tol: cluster_tol });
                } else {
                    groups.push(vec![v]);
                }
            }
            _ => groups.push(vec![v]),
        }
    }
    let exponents: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let cluster_gap = exponents.windows(2).map(|w| w[1] - w[0]).filter(|g| g.is_finite()).fold(f64::INFINITY, f64::min);
    Ok(SpectrumReport {
        multiplicities: groups.iter().map(Vec::len).collect(),
        exponents,
        horizon,
        cluster_gap,
        per_step_rates: sorted(rates),
    })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

pub fn lyapunov_spectrum(sys: &CocycleSystem, x: &[f64], horizon: usize, cluster_tol: f64, neg_inf_floor: f64) -> Result<SpectrumReport> {
    check_horizon(horizon)?;
    cluster_rates(&finite_time_rates(sys, x, horizon), horizon, cluster_tol, neg_inf_floor)
}

/// Frames of the slow filtration and of the fast sums along an orbit
/// segment `f^m x`, `m_lo <= m <= m_hi`, each computed with at least
/// `horizon` steps of look-ahead (slow) and look-back (fast).
///
/// In every slow frame the last `cumulative(i)` columns span `V_{<=i}`; in
/// every fast frame the first `d - cumulative(i)` columns span
/// `E_{i+1} + ... + E_k`.
#[derive(Debug, Clone)]
pub struct OrbitSplitting {
    pub spectrum: SpectrumReport,
    pub m_lo: i64,
    pub points: Vec<Point>,
    pub slow: Vec<DMatrix<f64>>,
    pub fast: Vec<DMatrix<f64>>,
}

impl OrbitSplitting {
    pub fn compute(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, m_lo: i64, m_hi: i64, horizon: usize) -> Result<Self> {
        check_horizon(horizon)?;
        if m_hi < m_lo {
            return Err(Error::InvalidArgument("empty orbit range".into()));
        }
        if spectrum.dim() != sys.dim() {
            return Err(Error::DimensionMismatch(spectrum.dim(), sys.dim()));
        }
        let d = sys.dim();
        let len = (m_hi - m_lo) as usize + 1;
        let h = horizon as i64;

        // one pass over f^{m_lo - h} x .. f^{m_hi + h - 1} x
        let mut pts = Vec::with_capacity(len + 2 * horizon);
        let mut p = sys.iterate(x, m_lo - h);
        for _ in 0..(len + 2 * horizon - 1) {
            let next = sys.forward(&p);
            pts.push(p);
            p = next;
        }
        let mats: Vec<DMatrix<f64>> = pts.iter().map(|p| sys.a(p)).collect();
        let offset = horizon; // index of f^{m_lo} x in pts

        let mut slow = vec![DMatrix::zeros(0, 0); len];
        let mut q = generic_frame(d);
        for j in (offset..mats.len()).rev() {
            q = qr(&(mats[j].transpose() * &q)).q;
            if j - offset < len {
                slow[j - offset] = q.clone();
            }
        }

        let mut fast = vec![DMatrix::zeros(0, 0); len];
        let mut q = generic_frame(d);
        for j in 0..(offset + len - 1) {
            q = qr(&(&mats[j] * &q)).q;
            // frame now sits at pts[j + 1]
            if j + 1 >= offset {
                fast[j + 1 - offset] = q.clone();
            }
        }

        Ok(Self { spectrum: spectrum.clone(), m_lo, points: pts[offset..offset + len].to_vec(), slow, fast })
    }

    pub fn m_hi(&self) -> i64 {
        self.m_lo + self.points.len() as i64 - 1
    }

    fn idx(&self, m: i64) -> usize {
        assert!(m >= self.m_lo && m <= self.m_hi(), "orbit index {m} outside [{}, {}]", self.m_lo, self.m_hi());
        (m - self.m_lo) as usize
    }

    pub fn point(&self, m: i64) -> &Point {
        &self.points[self.idx(m)]
    }

    fn slow_block(&self, m: i64, i: usize) -> DMatrix<f64> {
        let f = &self.slow[self.idx(m)];
        let c = self.spectrum.cumulative(i);
        f.columns(f.ncols() - c, c).into_owned()
    }

    fn fast_block(&self, m: i64, i: usize) -> DMatrix<f64> {
        let f = &self.fast[self.idx(m)];
        let c = f.ncols() - self.spectrum.cumulative(i);
        f.columns(0, c).into_owned()
    }

    /// `V_{<=i}(f^m x)` for `0 <= i <= k`.
    pub fn slow_sum(&self, m: i64, i: usize) -> Subspace {
        Subspace::new(self.slow_block(m, i), DEFAULT_ORTHO_TOL).expect("QR frames are orthonormal")
    }

    /// `E_{i+1}(f^m x) + ... + E_k(f^m x)` for `0 <= i <= k`.
    pub fn fast_sum(&self, m: i64, i: usize) -> Subspace {
        Subspace::new(self.fast_block(m, i), DEFAULT_ORTHO_TOL).expect("QR frames are orthonormal")
    }

    /// `E_i(f^m x)` for `1 <= i <= k`.
    pub fn space(&self, m: i64, i: usize) -> Result<Subspace> {
        let v = self.slow_sum(m, i);
        if i == 1 {
            return Ok(v);
        }
        let e = intersect(&v, &self.fast_sum(m, i - 1), INTERSECT_TOL)?;
        let expected = self.spectrum.multiplicities[i - 1];
        if e.dim() != expected {
            return Err(Error::DimensionCollapse { index: i, expected, found: e.dim() });
        }
        Ok(e)
    }

    /// Matrix of `A(f^m x): V_{<=i}(f^m x) -> V_{<=i}(f^{m+1} x)` in the frame bases.
    pub fn restricted_slow(&self, sys: &CocycleSystem, m: i64, i: usize) -> DMatrix<f64> {
        self.slow_block(m + 1, i).transpose() * sys.a(self.point(m)) * self.slow_block(m, i)
    }

    /// Matrix of `A(f^m x)` restricted to the fast sum after index `i`.
    pub fn restricted_fast(&self, sys: &CocycleSystem, m: i64, i: usize) -> DMatrix<f64> {
        self.fast_block(m + 1, i).transpose() * sys.a(self.point(m)) * self.fast_block(m, i)
    }

    /// Coordinates of `v` in the slow frame of `V_{<=i}(f^m x)`.
    pub fn slow_coords(&self, m: i64, i: usize, v: &DVector<f64>) -> DVector<f64> {
        self.slow_block(m, i).transpose() * v
    }

    pub fn fast_coords(&self, m: i64, i: usize, v: &DVector<f64>) -> DVector<f64> {
        self.fast_block(m, i).transpose() * v
    }

    /// `(1/n) log ||A(f^m x, n) v||` for `v` in `V_{<=i}(f^m x)`, evaluated
    /// through the restricted one-step maps so that round-off cannot leak into
    /// faster directions.
    pub fn slow_growth_rate(&self, sys: &CocycleSystem, m: i64, i: usize, v: &DVector<f64>, n: usize) -> f64 {
        let mut c = self.slow_coords(m, i, v);
        let mut log_scale = 0.0;
        for s in 0..n as i64 {
            c = self.restricted_slow(sys, m + s, i) * c;
            let nrm = c.norm();
            if nrm == 0.0 {
                return f64::NEG_INFINITY;
            }
            c /= nrm;
            log_scale += nrm.ln();
        }
        (log_scale - v.norm().ln()) / n as f64
    }

    pub fn sample(&self, m: i64) -> Result<SplittingSample> {
        let k = self.spectrum.k();
        let d = self.spectrum.dim();
        let spaces = (1..=k).map(|i| self.space(m, i)).collect::<Result<Vec<_>>>()?;
        let total = direct_sum_all(d, &spaces)?;
        let reconstruction = subspace_distance(&total, &Subspace::full(d))?;
        Ok(SplittingSample {
            point: self.point(m).clone(),
            slow_sums: (1..=k).map(|i| self.slow_sum(m, i)).collect(),
            fast_sums: (0..k).map(|i| self.fast_sum(m, i)).collect(),
            spaces,
            residuals: Residuals { equivariance: vec![None; k], duality: vec![None; k], reconstruction },
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Residuals {
    pub equivariance: Vec<Option<f64>>,
    pub duality: Vec<Option<f64>>,
    /// `d(E_1 + ... + E_k, R^d)`
    pub reconstruction: f64,
}

#[derive(Debug, Clone)]
pub struct SplittingSample {
    pub point: Point,
    /// `E_1(x), ..., E_k(x)`
    pub spaces: Vec<Subspace>,
    /// `V_{<=1}(x), ..., V_{<=k}(x)`
    pub slow_sums: Vec<Subspace>,
    /// `fast_sums[i] = E_{i+1}(x) + ... + E_k(x)` for `i = 0..k`
    pub fast_sums: Vec<Subspace>,
    pub residuals: Residuals,
}

pub fn slow_filtration(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, horizon: usize) -> Result<Vec<Subspace>> {
    let o = OrbitSplitting::compute(sys, x, spectrum, 0, 0, horizon)?;
    Ok((1..=spectrum.k()).map(|i| o.slow_sum(0, i)).collect())
}

/// `E_{i+1}(x) + ... + E_k(x)`; `i = 0` gives the whole space.
pub fn fast_sum(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, i: usize, horizon: usize) -> Result<Subspace> {
    if i >= spectrum.k() {
        return Err(Error::InvalidArgument(format!("fast_sum index {i} must be below k = {}", spectrum.k())));
    }
    let o = OrbitSplitting::compute(sys, x, spectrum, 0, 0, horizon)?;
    Ok(o.fast_sum(0, i))
}

/// Splitting at `x` with equivariance residuals against the splitting at `f x`.
pub fn oseledets_splitting(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, horizon: usize) -> Result<SplittingSample> {
    let o = OrbitSplitting::compute(sys, x, spectrum, 0, 1, horizon)?;
    let mut s = o.sample(0)?;
    let next = o.sample(1)?;
    for i in 1..=spectrum.k() {
        s.residuals.equivariance[i - 1] = Some(equivariance_residual(sys, &s, &next, spectrum, i)?);
    }
    Ok(s)
}

/// `d(A(x) E_i(x), E_i(f x))`; for `lambda_i = -inf` only containment is
/// measured, with images below the zero-pivot threshold counting as zero.
pub fn equivariance_residual(sys: &CocycleSystem, at_x: &SplittingSample, at_fx: &SplittingSample, spectrum: &SpectrumReport, i: usize) -> Result<f64> {
    let a = sys.a(&at_x.point);
    let e = &at_x.spaces[i - 1];
    let target = &at_fx.spaces[i - 1];
    if spectrum.exponents[i - 1] == f64::NEG_INFINITY {
        let scale = crate::linalg::spectral_norm(&a);
        let mut worst: f64 = 0.0;
        for b in e.basis().column_iter() {
            let img = &a * b;
            if img.norm() <= ZERO_PIVOT * scale {
                continue;
            }
            worst = worst.max(target.distance_to(&img) / scale);
        }
        return Ok(worst);
    }
    subspace_distance(&e.image(&a)?, target)
}

/// `d(F_i(x), (sum_{j != i} E_j(x))^perp)` where `F_i` is the adjoint
/// cocycle's `i`-th Oseledets space.
pub fn adjoint_duality_residual(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, i: usize, horizon: usize) -> Result<f64> {
    let fwd = OrbitSplitting::compute(sys, x, spectrum, 0, 0, horizon)?.sample(0)?;
    let adj = crate::cocycle::adjoint_cocycle(sys);
    let bwd = OrbitSplitting::compute(&adj, x, spectrum, 0, 0, horizon)?.sample(0)?;
    duality_residual(&fwd, &bwd, i)
}

/// Duality residual from precomputed forward and adjoint splittings at the same point.
pub fn duality_residual(fwd: &SplittingSample, adj: &SplittingSample, i: usize) -> Result<f64> {
    let d = fwd.spaces[0].ambient_dim();
    let others = direct_sum_all(d, fwd.spaces.iter().enumerate().filter(|(j, _)| *j != i - 1).map(|(_, s)| s))?;
    subspace_distance(&adj.spaces[i - 1], &crate::subspace::orthogonal_complement(&others))
}

/// Probability vector spanning the top Oseledets space of a column-stochastic
/// cocycle.
pub fn random_invariant_measure(sys: &CocycleSystem, x: &[f64], horizon: usize) -> Result<DVector<f64>> {
    check_horizon(horizon)?;
    let a = sys.a(x);
    let stochastic = a.iter().all(|v| *v >= 0.0) && a.column_iter().all(|c| (c.sum() - 1.0).abs() <= 1e-12);
    if !stochastic {
        return Err(Error::NotStochastic);
    }
    let spectrum = lyapunov_spectrum(sys, x, horizon, DEFAULT_CLUSTER_TOL, DEFAULT_NEG_INF_FLOOR)?;
    if *spectrum.multiplicities.last().unwrap() != 1 {
        return Err(Error::ClusterAmbiguity { gap: 0.0, tol: DEFAULT_CLUSTER_TOL });
    }
    let o = OrbitSplitting::compute(sys, x, &spectrum, 0, 0, horizon)?;
    let top = o.fast_sum(0, spectrum.k() - 1);
    Ok(normalize_probability(&top.basis().column(0).into_owned())?)
}

/// Scales `v` to unit sum, rejecting vectors with entries of both signs.
pub fn normalize_probability(v: &DVector<f64>) -> Result<DVector<f64>> {
    let s = v.sum();
    if s == 0.0 {
        return Err(Error::SignDefect(0.0));
    }
    let mut p = v / s;
    let most_negative = p.min();
    if most_negative < -1e-8 {
        return Err(Error::SignDefect(most_negative));
    }
    p.iter_mut().for_each(|t| *t = t.max(0.0));
    let s = p.sum();
    Ok(p / s)
}

/// Image of a subspace basis pushed through `A` and re-orthonormalized; used by
/// checks comparing `A(x) E(x)` with `E(f x)`.
pub fn push_forward(sys: &CocycleSystem, x: &[f64], e: &Subspace) -> Result<Subspace> {
    orthonormalize(&(sys.a(x) * e.basis()), DEFAULT_ORTHO_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::make_builtin;
    use serde_json::json;

    fn constant(a: &str) -> CocycleSystem {
        make_builtin("constant", json!({ "A": a }).as_object().unwrap(), 0).unwrap()
    }

    fn builtin(name: &str) -> CocycleSystem {
        make_builtin(name, &Default::default(), 7).unwrap()
    }

    fn line(v: &[f64]) -> Subspace {
        Subspace::line(&DVector::from_column_slice(v)).unwrap()
    }

    fn spec(sys: &CocycleSystem, h: usize) -> SpectrumReport {
        lyapunov_spectrum(sys, &sys.sample_points(1, 0)[0], h, DEFAULT_CLUSTER_TOL, DEFAULT_NEG_INF_FLOOR).unwrap()
    }

    #[test]
    fn constant_diagonal_spectrum() {
        let s = spec(&constant("2,0;0,0.5"), 100);
        let l2 = 2f64.ln();
        assert_eq!(s.multiplicities, vec![1, 1]);
        assert!((s.exponents[0] + l2).abs() < 1e-10 && (s.exponents[1] - l2).abs() < 1e-10);
    }

    #[test]
    fn clustering_rules() {
        let s = cluster_rates(&[0.0, 0.01, 1.0], 100, 0.05, -30.0).unwrap();
        assert_eq!(s.multiplicities, vec![2, 1]);
        assert!(matches!(cluster_rates(&[0.0, 0.07], 100, 0.05, -30.0), Err(Error::ClusterAmbiguity { .. })));
        let s = cluster_rates(&[-40.0, f64::NEG_INFINITY, 0.5], 100, 0.05, -30.0).unwrap();
        assert_eq!(s.exponents[0], f64::NEG_INFINITY);
        assert_eq!(s.multiplicities, vec![2, 1]);
        assert_eq!(s.per_step_rates[1], -40.0);
    }

    #[test]
    fn short_horizon_rejected() {
        assert!(lyapunov_spectrum(&constant("1,0;0,2"), &[0.0], 5, 0.05, -30.0).is_err());
    }

    #[test]
    fn rank_deficient_has_minus_infinity() {
        let s = spec(&builtin("cat_rank_deficient"), 200);
        assert_eq!(s.exponents[0], f64::NEG_INFINITY);
        assert_eq!(s.multiplicities, vec![1, 1]);
    }

    #[test]
    fn diagonal_filtration_and_fast_sum() {
        let sys = constant("2,0;0,0.5");
        let s = spec(&sys, 100);
        let v = slow_filtration(&sys, &[0.0], &s, 100).unwrap();
        assert!(subspace_distance(&v[0], &line(&[0.0, 1.0])).unwrap() < 1e-8);
        assert_eq!(v[1].dim(), 2);
        assert_eq!(fast_sum(&sys, &[0.0], &s, 0, 100).unwrap().dim(), 2);
        assert!(subspace_distance(&fast_sum(&sys, &[0.0], &s, 1, 100).unwrap(), &line(&[1.0, 0.0])).unwrap() < 1e-8);
    }

    #[test]
    fn nonnormal_constant_splitting() {
        let sys = constant("2,1;0,0.5");
        let s = spec(&sys, 100);
        let sample = oseledets_splitting(&sys, &[0.0], &s, 100).unwrap();
        assert!(subspace_distance(&sample.spaces[1], &line(&[1.0, 0.0])).unwrap() < 1e-6);
        assert!(subspace_distance(&sample.spaces[0], &line(&[-2.0 / 3.0, 1.0])).unwrap() < 1e-6);
        assert!(sample.residuals.reconstruction < 1e-6);
        assert!(sample.residuals.equivariance.iter().all(|r| r.unwrap() < 1e-10));
        // left-eigenvector oracle: F_1 = E_2^perp = span e2
        assert!(adjoint_duality_residual(&sys, &[0.0], &s, 1, 100).unwrap() < 1e-6);
    }

    #[test]
    fn single_exponent_gives_whole_space() {
        let sys = constant("3,0;0,3");
        let s = spec(&sys, 50);
        assert_eq!(s.k(), 1);
        let v = slow_filtration(&sys, &[0.0], &s, 50).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].dim(), 2);
    }

    #[test]
    fn rank_deficient_kernel_and_range() {
        let sys = builtin("cat_rank_deficient");
        let s = spec(&sys, 200);
        let x = sys.sample_points(1, 3).remove(0);
        let sample = oseledets_splitting(&sys, &x, &s, 200).unwrap();
        let r = crate::builtins::cat_rank_deficient_direction(&x);
        let rb = crate::builtins::cat_rank_deficient_direction(&sys.backward(&x));
        assert!(subspace_distance(&sample.spaces[0], &line(&[-r[1], r[0]])).unwrap() < 1e-10);
        assert!(subspace_distance(&sample.spaces[1], &line(&rb)).unwrap() < 1e-10);
        assert_eq!(sample.residuals.equivariance[0], Some(0.0));
        assert!(sample.residuals.equivariance[1].unwrap() < 5e-3);
    }

    #[test]
    fn stationary_vector_of_constant_stochastic_matrix() {
        let sys = constant("0.75,0.35;0.25,0.65");
        let v = random_invariant_measure(&sys, &[0.0], 100).unwrap();
        assert!((v[0] - 7.0 / 12.0).abs() < 1e-8 && (v[1] - 5.0 / 12.0).abs() < 1e-8);
    }

    #[test]
    fn identity_has_no_simple_top_exponent() {
        let sys = constant("1,0;0,1");
        assert!(matches!(random_invariant_measure(&sys, &[0.0], 100), Err(Error::ClusterAmbiguity { .. })));
    }

    #[test]
    fn non_stochastic_rejected() {
        assert!(matches!(random_invariant_measure(&constant("2,0;0,1"), &[0.0], 100), Err(Error::NotStochastic)));
    }

    #[test]
    fn mixed_signs_rejected() {
        let v = DVector::from_vec(vec![1.0, -0.5]);
        assert!(matches!(normalize_probability(&v), Err(Error::SignDefect(_))));
    }
}
