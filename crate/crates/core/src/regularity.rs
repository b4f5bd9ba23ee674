//! Per-point regularity constants of the splitting `E^1 = V_{<=i}`,
//! `E^2 = E_{i+1} + ... + E_k`, temperedness, and exponential dichotomy.
//!
//! Every supremum over `n >= 0` becomes a maximum over `0 <= n <= window`.
//! Growth along `E^1` is evaluated through the one-step maps restricted to
//! the slow frames, growth along `E^2` through the fast frames; pushing a
//! slow vector through raw matrix products would let round-off leak into the
//! fast directions within a few dozen steps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::cocycle::CocycleSystem;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, ScaledProduct, ZERO_PIVOT};
use crate::met::{OrbitSplitting, SpectrumReport, DEFAULT_CLUSTER_TOL};
use crate::subspace::{min_sum_gap, Subspace};

/// Cap on the scan for `n(x)`.
pub const N_X_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityProfile {
    pub point: Vec<f64>,
    pub split_index: usize,
    pub epsilon: f64,
    pub c_upper: f64,
    pub c_lower: f64,
    pub c_tilde: f64,
    pub k_direct: f64,
    pub k_lemma: f64,
    pub n_x: usize,
    pub horizon: usize,
}

/// Largest "round" epsilon compatible with `lo + 3 eps <= hi - 2 eps` for
/// every adjacent pair: a sixth of the smallest gap, with `-inf` replaced by
/// `lambda_2 - 5`.
pub fn auto_epsilon(spectrum: &SpectrumReport) -> f64 {
    let k = spectrum.k();
    let gap = (1..k).map(|i| spectrum.finite_exponent(i + 1) - spectrum.finite_exponent(i)).fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        gap / 6.0
    } else {
        DEFAULT_CLUSTER_TOL
    }
}

fn check_split(spectrum: &SpectrumReport, i: usize) -> Result<()> {
    if i == 0 || i >= spectrum.k() {
        return Err(Error::InvalidArgument(format!("split index {i} must lie in 1..{}", spectrum.k())));
    }
    Ok(())
}

/// `max(1, max_n ||A(f^m x, n)|E^1|| e^{-(lambda_i + eps) n})` over `n <= window`.
pub fn upper_constant_on(sys: &CocycleSystem, o: &OrbitSplitting, m: i64, i: usize, epsilon: f64, window: usize) -> f64 {
    let rate = o.spectrum.finite_exponent(i) + epsilon;
    let mut prod = ScaledProduct::identity(o.spectrum.cumulative(i));
    let mut best: f64 = 0.0;
    for n in 1..=window {
        prod.left_mul(&o.restricted_slow(sys, m + n as i64 - 1, i));
        if prod.is_zero() {
            break;
        }
        best = best.max(prod.log_norm() - rate * n as f64);
    }
    best.exp()
}

/// `max(1, max_n e^{(lambda_{i+1} - eps) n} / s_min(A(f^m x, n)|E^2))` over `n <= window`.
pub fn lower_constant_on(sys: &CocycleSystem, o: &OrbitSplitting, m: i64, i: usize, epsilon: f64, window: usize) -> Result<f64> {
    let rate = o.spectrum.finite_exponent(i + 1) - epsilon;
    // product of restricted inverses; 1 / s_min = its norm
    let mut inv = ScaledProduct::identity(o.spectrum.dim() - o.spectrum.cumulative(i));
    let mut best: f64 = 0.0;
    for n in 1..=window {
        let step = m + n as i64 - 1;
        let h = o.restricted_fast(sys, step, i);
        let scale = spectral_norm(&sys.a(o.point(step)));
        let h_inv = match h.clone().try_inverse() {
            Some(hi) if crate::linalg::min_singular_value(&h) > ZERO_PIVOT * scale => hi,
            _ => return Err(Error::SingularRestriction(n - 1)),
        };
        inv.right_mul(&h_inv);
        best = best.max(rate * n as f64 + inv.log_norm());
    }
    Ok(best.exp())
}

/// `max(1, max_n ||A(f^m x, n)|| e^{-(lambda_k + eps) n})` over `n <= window`.
pub fn c_tilde_on(sys: &CocycleSystem, o: &OrbitSplitting, m: i64, epsilon: f64, window: usize) -> f64 {
    let rate = o.spectrum.finite_exponent(o.spectrum.k()) + epsilon;
    let mut prod = ScaledProduct::identity(o.spectrum.dim());
    let mut best: f64 = 0.0;
    for n in 1..=window {
        prod.left_mul(&sys.a(o.point(m + n as i64 - 1)));
        if prod.is_zero() {
            break;
        }
        best = best.max(prod.log_norm() - rate * n as f64);
    }
    best.exp()
}

/// Smallest `n` with `e^{(hi - eps) n} - c2 e^{(lo + eps) n} >= e^{(hi - 2 eps) n}`.
pub fn n_of_x(lambda_lo: f64, lambda_hi: f64, epsilon: f64, c2: f64) -> Result<usize> {
    if lambda_lo + 3.0 * epsilon > lambda_hi - 2.0 * epsilon {
        return Err(Error::GapTooSmall);
    }
    // divided through by e^{(hi - eps) n}
    let slope = lambda_lo - lambda_hi + 2.0 * epsilon;
    (0..=N_X_CAP)
        .find(|&n| {
            let n = n as f64;
            1.0 - c2 * (slope * n).exp() >= (-epsilon * n).exp()
        })
        .ok_or(Error::NoSuchN(N_X_CAP))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleConstants {
    pub k_direct: f64,
    pub k_lemma: f64,
    pub n_x: usize,
}

/// Angle constants for `E^1`, `E^2`.
///
/// `c_tilde` bounds growth with the top exponent `lambda_top`, so when
/// `lambda_top > lambda_hi` the lemma's bound picks up
/// `e^{(lambda_top - lambda_hi) n_x}`.
#[allow(clippy::too_many_arguments)]
pub fn angle_constant(
    e1: &Subspace,
    e2: &Subspace,
    c_upper: f64,
    c_lower: f64,
    c_tilde: f64,
    epsilon: f64,
    lambda_lo: f64,
    lambda_hi: f64,
    lambda_top: f64,
) -> Result<AngleConstants> {
    if lambda_lo + 3.0 * epsilon > lambda_hi - 2.0 * epsilon {
        return Err(Error::GapTooSmall);
    }
    let gamma = min_sum_gap(e1, e2)?;
    let n_x = n_of_x(lambda_lo, lambda_hi, epsilon, c_upper * c_lower)?;
    let log_k = std::f64::consts::LN_2 + c_lower.ln() + c_tilde.ln() + (3.0 * epsilon + lambda_top - lambda_hi) * n_x as f64;
    Ok(AngleConstants { k_direct: (2.0 / gamma).max(1.0), k_lemma: log_k.exp().max(1.0), n_x })
}

/// Profile at `f^m x` from precomputed frames covering `m..=m + window`.
pub fn profile_on(sys: &CocycleSystem, o: &OrbitSplitting, m: i64, i: usize, epsilon: f64, window: usize) -> Result<RegularityProfile> {
    let s = &o.spectrum;
    check_split(s, i)?;
    let c_upper = upper_constant_on(sys, o, m, i, epsilon, window);
    let c_lower = lower_constant_on(sys, o, m, i, epsilon, window)?;
    let c_tilde = c_tilde_on(sys, o, m, epsilon, window);
    let ang = angle_constant(
        &o.slow_sum(m, i),
        &o.fast_sum(m, i),
        c_upper,
        c_lower,
        c_tilde,
        epsilon,
        s.finite_exponent(i),
        s.finite_exponent(i + 1),
        s.finite_exponent(s.k()),
    )?;
    Ok(RegularityProfile {
        point: o.point(m).clone(),
        split_index: i,
        epsilon,
        c_upper,
        c_lower,
        c_tilde,
        k_direct: ang.k_direct,
        k_lemma: ang.k_lemma,
        n_x: ang.n_x,
        horizon: window,
    })
}

pub fn regularity_profile(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, i: usize, epsilon: f64, horizon: usize) -> Result<RegularityProfile> {
    let o = OrbitSplitting::compute(sys, x, spectrum, 0, horizon as i64, horizon)?;
    profile_on(sys, &o, 0, i, epsilon, horizon)
}

pub fn upper_constant(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, i: usize, epsilon: f64, horizon: usize) -> Result<f64> {
    check_split(spectrum, i)?;
    let o = OrbitSplitting::compute(sys, x, spectrum, 0, horizon as i64, horizon)?;
    Ok(upper_constant_on(sys, &o, 0, i, epsilon, horizon))
}

pub fn lower_constant(sys: &CocycleSystem, x: &[f64], spectrum: &SpectrumReport, i: usize, epsilon: f64, horizon: usize) -> Result<f64> {
    check_split(spectrum, i)?;
    let o = OrbitSplitting::compute(sys, x, spectrum, 0, horizon as i64, horizon)?;
    lower_constant_on(sys, &o, 0, i, epsilon, horizon)
}

/// `max_{|m| <= M} g(f^m x) / (g(x) e^{rate |m|})`.
pub fn temperedness_check(sys: &CocycleSystem, g: impl Fn(&[f64]) -> f64, x: &[f64], epsilon_rate: f64, window: usize) -> f64 {
    let pts = crate::cocycle::orbit(sys, x, window, window);
    let values: Vec<f64> = pts.iter().map(|p| g(p)).collect();
    tempered_ratio(&values, epsilon_rate)
}

/// Worst temperedness ratio for values `g(f^m x)`, `m = -M..=M` (centre at `M`).
pub fn tempered_ratio(values: &[f64], epsilon_rate: f64) -> f64 {
    assert!(values.len() % 2 == 1, "values must be centred on m = 0");
    let mid = values.len() / 2;
    let g0 = values[mid];
    values
        .iter()
        .enumerate()
        .map(|(j, g)| g / (g0 * (epsilon_rate * (j as f64 - mid as f64).abs()).exp()))
        .fold(0.0, f64::max)
}

/// `log |det(A(x)|E^2(x))|` in orthonormal bases of `E^2(x)` and `E^2(f x)`.
pub fn restricted_log_det(sys: &CocycleSystem, o: &OrbitSplitting, m: i64, i: usize) -> f64 {
    o.restricted_fast(sys, m, i).determinant().abs().ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrabilityEstimate {
    pub mean: f64,
    /// Half-width of the 95% bootstrap interval of the mean.
    pub half_width: f64,
    pub samples: usize,
}

/// Empirical mean of `log |det(A|E^2)|` over `points`, with a bootstrap
/// half-width.
pub fn det_integrability_check(sys: &CocycleSystem, spectrum: &SpectrumReport, points: &[Vec<f64>], i: usize, horizon: usize) -> Result<IntegrabilityEstimate> {
    check_split(spectrum, i)?;
    let psi = points
        .iter()
        .map(|x| {
            let o = OrbitSplitting::compute(sys, x, spectrum, 0, 1, horizon)?;
            Ok(restricted_log_det(sys, &o, 0, i))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(bootstrap_mean(&psi, sys.rng(u64::MAX)))
}

fn bootstrap_mean(values: &[f64], mut rng: impl Rng) -> IntegrabilityEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut means: Vec<f64> = (0..200).map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(|a, b| a.total_cmp(b));
    let half_width = (means[194] - means[5]) / 2.0;
    IntegrabilityEstimate { mean, half_width, samples: n }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyParams {
    pub d_const: f64,
    pub lambda_rate: f64,
    pub epsilon: f64,
    pub window: usize,
}

impl DichotomyParams {
    /// `D = max(C_upper, C_lower) K_direct`, `lambda = min(-lambda_i, lambda_{i+1}) - eps`,
    /// and a tempering rate of `2 eps`.
    pub fn from_profile(p: &RegularityProfile, spectrum: &SpectrumReport, window: usize) -> Result<Self> {
        let i = p.split_index;
        let lambda_rate = (-spectrum.finite_exponent(i)).min(spectrum.finite_exponent(i + 1)) - p.epsilon;
        if lambda_rate <= 0.0 {
            return Err(Error::NotHyperbolic(lambda_rate));
        }
        Ok(Self { d_const: p.c_upper.max(p.c_lower) * p.k_direct, lambda_rate, epsilon: 2.0 * p.epsilon, window })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyReport {
    pub holds: bool,
    /// Largest ratio of an observed norm to its dichotomy bound.
    pub worst_margin: f64,
    /// Largest `||A_n P_n - P_{n+1} A_n|| / ||A_n||`.
    pub commutation: f64,
    /// Largest condition number of `[basis(E^1) | basis(E^2)]`.
    pub projector_cond: f64,
}

pub const COMMUTATION_TOL: f64 = 1e-6;

/// Index of the split separating negative from positive exponents.
pub fn hyperbolic_split(spectrum: &SpectrumReport, cluster_tol: f64) -> Result<usize> {
    if let Some(l) = spectrum.exponents.iter().find(|l| l.abs() < cluster_tol) {
        return Err(Error::NotHyperbolic(*l));
    }
    let i = spectrum.exponents.iter().filter(|l| **l < 0.0).count();
    if i == 0 || i == spectrum.k() {
        return Err(Error::InvalidArgument("all exponents have the same sign; no splitting to test".into()));
    }
    Ok(i)
}

/// Oblique projections onto `E^1` along `E^2` and back, as coefficient rows:
/// `P = B1 * s1`, `Q = B2 * s2`.
fn oblique_rows(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let c = b1.ncols();
    let d = b1.nrows();
    let t = DMatrix::from_fn(d, d, |r, col| if col < c { b1[(r, col)] } else { b2[(r, col - c)] });
    let sv = crate::linalg::singular_values(&t);
    let cond = sv[0] / sv[d - 1];
    let t_inv = t.try_inverse().ok_or(Error::NotTransverse(1))?;
    Ok((t_inv.rows(0, c).into_owned(), t_inv.rows(c, d - c).into_owned(), cond))
}

/// Checks the dichotomy bounds for `A_n = A(f^n x)` on `|n| <= window`.
///
/// `o` must cover `-window..=window`.
pub fn dichotomy_check(sys: &CocycleSystem, o: &OrbitSplitting, params: &DichotomyParams, i: usize) -> Result<DichotomyReport> {
    let s = &o.spectrum;
    let split = hyperbolic_split(s, DEFAULT_CLUSTER_TOL)?;
    if split != i {
        return Err(Error::InvalidArgument(format!("split index {i} does not separate signs (expected {split})")));
    }
    let mw = params.window as i64;
    let bound = |m: i64, n: i64| params.d_const.ln() - params.lambda_rate * (m - n).abs() as f64 + params.epsilon * n.abs() as f64;

    let mut rows = Vec::with_capacity(2 * params.window + 1);
    let mut cond: f64 = 1.0;
    for n in -mw..=mw {
        let b1 = o.slow_sum(n, i).basis().clone();
        let b2 = o.fast_sum(n, i).basis().clone();
        let (s1, s2, c) = oblique_rows(&b1, &b2)?;
        cond = cond.max(c);
        rows.push((b1 * &s1, s1, s2));
    }
    let at = |n: i64| &rows[(n + mw) as usize];

    let mut commutation: f64 = 0.0;
    for n in -mw..mw {
        let a = sys.a(o.point(n));
        let r = (&a * &at(n).0 - &at(n + 1).0 * &a).amax() / a.amax().max(f64::MIN_POSITIVE);
        commutation = commutation.max(r);
    }

    let slow: Vec<DMatrix<f64>> = (-mw..mw).map(|m| o.restricted_slow(sys, m, i)).collect();
    let fast_inv: Vec<DMatrix<f64>> = (-mw..mw)
        .map(|m| o.restricted_fast(sys, m, i).try_inverse().ok_or(Error::SingularRestriction((m + mw) as usize)))
        .collect::<Result<_>>()?;
    let map_idx = |m: i64| (m + mw) as usize;

    let mut worst = f64::NEG_INFINITY;
    for n in -mw..=mw {
        let (_, s1, s2) = at(n);
        // forward on E^1: ||A(m, n) P_n|| for m >= n
        let mut prod = ScaledProduct::from_matrix(s1.clone());
        worst = worst.max(prod.log_norm() - bound(n, n));
        for m in (n + 1)..=mw {
            prod.left_mul(&slow[map_idx(m - 1)]);
            worst = worst.max(prod.log_norm() - bound(m, n));
        }
        // backward on E^2 through restricted inverses: ||A(m, n) Q_n|| for m <= n
        let mut prod = ScaledProduct::from_matrix(s2.clone());
        worst = worst.max(prod.log_norm() - bound(n, n));
        for m in (-mw..n).rev() {
            prod.left_mul(&fast_inv[map_idx(m)]);
            worst = worst.max(prod.log_norm() - bound(m, n));
        }
    }
    let worst_margin = worst.exp();
    Ok(DichotomyReport {
        holds: worst_margin <= 1.0 + 1e-9 && commutation <= COMMUTATION_TOL,
        worst_margin,
        commutation,
        projector_cond: cond,
    })
}

/// Random unit vector in a subspace, for certificate checks.
pub fn random_unit_in(e: &Subspace, rng: &mut impl Rng) -> DVector<f64> {
    let c = DVector::from_fn(e.dim(), |_, _| rng.gen::<f64>() - 0.5);
    let v = e.basis() * c;
    let n = v.norm();
    v / n
}

/// Worst ratios of observed quantity to bound over random test vectors;
/// each inequality holds when its ratio is at most 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    /// `||A(x, n) u|| / (C_upper e^{(lambda_i + eps) n} ||u||)`, `u` in `E^1`
    pub upper: f64,
    /// `e^{(lambda_{i+1} - eps) n} ||v|| / (C_lower ||A(x, n) v||)`, `v` in `E^2`
    pub lower: f64,
    /// `max(||u||, ||v||) / (K_direct ||u + v||)`
    pub angle: f64,
}

impl CertificateReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.upper <= 1.0 + tol && self.lower <= 1.0 + tol && self.angle <= 1.0 + tol
    }
}

/// Tests `p` (computed at `f^m x` from `o`) on `count` random vectors per
/// inequality, over `n <= p.horizon`.
pub fn certificate_check(sys: &CocycleSystem, o: &OrbitSplitting, m: i64, p: &RegularityProfile, count: usize, rng: &mut impl Rng) -> CertificateReport {
    let s = &o.spectrum;
    let i = p.split_index;
    let (e1, e2) = (o.slow_sum(m, i), o.fast_sum(m, i));
    let up_rate = s.finite_exponent(i) + p.epsilon;
    let low_rate = s.finite_exponent(i + 1) - p.epsilon;
    let mut rep = CertificateReport { upper: 0.0, lower: 0.0, angle: 0.0 };
    for _ in 0..count {
        let mut c = o.slow_coords(m, i, &random_unit_in(&e1, rng));
        let mut log_norm = 0.0;
        for n in 1..=p.horizon {
            c = o.restricted_slow(sys, m + n as i64 - 1, i) * c;
            let nrm = c.norm();
            if nrm == 0.0 {
                break;
            }
            c /= nrm;
            log_norm += nrm.ln();
            rep.upper = rep.upper.max((log_norm - p.c_upper.ln() - up_rate * n as f64).exp());
        }

        let mut c = o.fast_coords(m, i, &random_unit_in(&e2, rng));
        let mut log_norm = 0.0;
        for n in 1..=p.horizon {
            c = o.restricted_fast(sys, m + n as i64 - 1, i) * c;
            let nrm = c.norm();
            c /= nrm;
            log_norm += nrm.ln();
            rep.lower = rep.lower.max((low_rate * n as f64 - p.c_lower.ln() - log_norm).exp());
        }

        let u = random_unit_in(&e1, rng) * rng.gen_range(0.05..1.0);
        let v = random_unit_in(&e2, rng) * rng.gen_range(0.05..1.0);
        rep.angle = rep.angle.max(u.norm().max(v.norm()) / (p.k_direct * (&u + &v).norm()));
    }
    rep
}
