//! Pesin-type sets `Lambda_l`, empirical Hölder exponents of subspace
//! fields on them, and Brin's quantitative closeness bound.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{CocycleSystem, Point};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::met::{OrbitSplitting, SpectrumReport};
use crate::regularity::RegularityProfile;
use crate::subspace::{direct_sum, orthogonal_complement, subspace_distance, Subspace};

/// Stand-in for `l = infinity`.
pub const LEVEL_CAP: f64 = 1e12;
pub const MIN_PAIRS: usize = 30;
pub const MAX_PAIRS: usize = 10_000;
/// Distances below this count as zero.
pub const ZERO_DISTANCE: f64 = 1e-12;
const MIN_BETA: f64 = 1e-6;

/// Samples whose constants are all bounded by `level`.
///
/// Besides `C_upper`, `C_tilde` and `K_direct` the filter also bounds
/// `C_lower`: the lower growth estimate on the fast sum is part of the same
/// constant `C(x)` on the sets used for the Brin argument.
#[derive(Debug, Clone)]
pub struct LambdaSet {
    pub level: f64,
    /// Positions of the members in the profile list the set was built from.
    pub indices: Vec<usize>,
    pub members: Vec<RegularityProfile>,
    pub total: usize,
    pub empirical_measure: f64,
    pub delta: Option<f64>,
    pub split_index: usize,
    pub epsilon: f64,
}

impl LambdaSet {
    pub fn points(&self) -> Vec<Point> {
        self.members.iter().map(|p| p.point.clone()).collect()
    }

    /// Members of both sets; both must come from profile lists over the same
    /// samples. The result keeps the split index of `self` and the larger level.
    pub fn intersect(&self, other: &LambdaSet) -> Result<LambdaSet> {
        if self.total != other.total {
            return Err(Error::InvalidArgument("Lambda sets built over different sample lists".into()));
        }
        let keep: Vec<usize> = (0..self.indices.len()).filter(|&j| other.indices.binary_search(&self.indices[j]).is_ok()).collect();
        let members: Vec<RegularityProfile> = keep.iter().map(|&j| self.members[j].clone()).collect();
        Ok(LambdaSet {
            level: self.level.max(other.level),
            indices: keep.iter().map(|&j| self.indices[j]).collect(),
            empirical_measure: measure(members.len(), self.total),
            members,
            total: self.total,
            delta: self.delta,
            split_index: self.split_index,
            epsilon: self.epsilon,
        })
    }
}

fn measure(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// The largest of the constants filtered on; NaN counts as infinite.
pub fn profile_level(p: &RegularityProfile) -> f64 {
    let cs = [p.c_upper, p.c_lower, p.c_tilde, p.k_direct];
    if cs.iter().any(|c| c.is_nan()) {
        f64::INFINITY
    } else {
        cs.into_iter().fold(0.0, f64::max)
    }
}

fn check_shared(profiles: &[RegularityProfile]) -> Result<(usize, f64)> {
    let (i, eps) = profiles.first().map_or((0, 0.0), |p| (p.split_index, p.epsilon));
    if profiles.iter().any(|p| p.split_index != i || p.epsilon != eps) {
        return Err(Error::InvalidArgument("profiles mix split indices or epsilons".into()));
    }
    Ok((i, eps))
}

pub fn build_lambda_set(profiles: &[RegularityProfile], level: f64) -> Result<LambdaSet> {
    let (split_index, epsilon) = check_shared(profiles)?;
    let indices: Vec<usize> = (0..profiles.len()).filter(|&j| profile_level(&profiles[j]) <= level).collect();
    Ok(LambdaSet {
        level,
        members: indices.iter().map(|&j| profiles[j].clone()).collect(),
        empirical_measure: measure(indices.len(), profiles.len()),
        indices,
        total: profiles.len(),
        delta: None,
        split_index,
        epsilon,
    })
}

/// Smallest integer `l >= 1` with empirical measure of `Lambda_l` above `1 - delta`.
pub fn choose_level(profiles: &[RegularityProfile], delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")));
    }
    check_shared(profiles)?;
    let n = profiles.len();
    if n == 0 {
        return Err(Error::Unreachable(LEVEL_CAP));
    }
    let mut levels: Vec<f64> = profiles.iter().map(profile_level).collect();
    levels.sort_by(f64::total_cmp);
    // fewest members whose share exceeds 1 - delta
    let need = (1..=n).find(|&c| c as f64 / n as f64 > 1.0 - delta).unwrap_or(n);
    let l = levels[need - 1].ceil().max(1.0);
    if !(l <= LEVEL_CAP) {
        return Err(Error::Unreachable(LEVEL_CAP));
    }
    Ok(l)
}

pub fn lambda_set_for_delta(profiles: &[RegularityProfile], delta: f64) -> Result<LambdaSet> {
    let l = choose_level(profiles, delta)?;
    let mut set = build_lambda_set(profiles, l)?;
    set.delta = Some(delta);
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDistance {
    /// Sample positions, `a < b`.
    pub a: usize,
    pub b: usize,
    pub rho: f64,
    pub d_subspace: f64,
}

/// All pairs with `0 < rho <= eps0`, sorted by `(rho, a, b)`, thinned to at
/// most [`MAX_PAIRS`] by taking evenly spaced ranks in that order.
pub fn qualifying_pairs(points: &[Point], metric: impl Fn(&[f64], &[f64]) -> f64 + Sync, eps0: f64) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut pairs: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let metric = &metric;
            (a + 1..n).filter_map(move |b| {
                let rho = metric(&points[a], &points[b]);
                (rho > 0.0 && rho <= eps0).then_some((a, b, rho))
            })
        })
        .collect();
    pairs.sort_by(|p, q| p.2.total_cmp(&q.2).then(p.0.cmp(&q.0)).then(p.1.cmp(&q.1)));
    if pairs.len() > MAX_PAIRS {
        let m = pairs.len();
        pairs = (0..MAX_PAIRS).map(|r| pairs[r * (m - 1) / (MAX_PAIRS - 1)]).collect();
    }
    pairs
}

/// Subspace distances on the given pairs.
pub fn pair_distances(fields: &[Subspace], pairs: &[(usize, usize, f64)]) -> Result<Vec<PairDistance>> {
    pairs
        .par_iter()
        .map(|&(a, b, rho)| Ok(PairDistance { a, b, rho, d_subspace: subspace_distance(&fields[a], &fields[b])? }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub beta: f64,
    pub l_const: f64,
    pub eps0: f64,
    pub pair_count: usize,
    pub r2: f64,
    /// Most distances vanish: the field is locally constant on the sample.
    pub zero_distances: bool,
}

/// Fit `log d = log L + beta log rho` and inflate `L` to an envelope.
pub fn fit_holder(pairs: &[PairDistance], eps0: f64) -> Result<HolderEstimate> {
    let pairs: Vec<&PairDistance> = pairs.iter().filter(|p| p.rho > 0.0 && p.rho <= eps0).collect();
    if pairs.len() < MIN_PAIRS {
        return Err(Error::TooFewPairs { found: pairs.len(), needed: MIN_PAIRS });
    }
    let zeros = pairs.iter().filter(|p| p.d_subspace < ZERO_DISTANCE).count();
    if 2 * zeros > pairs.len() {
        return Ok(HolderEstimate { beta: 1.0, l_const: ZERO_DISTANCE, eps0, pair_count: pairs.len(), r2: 1.0, zero_distances: true });
    }
    let xy: Vec<(f64, f64)> = pairs.iter().filter(|p| p.d_subspace >= ZERO_DISTANCE).map(|p| (p.rho.ln(), p.d_subspace.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("all pair distances rho coincide; cannot fit an exponent".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    let beta = slope.clamp(MIN_BETA, 1.0);
    let log_l = pairs.iter().map(|p| p.d_subspace.ln() - beta * p.rho.ln()).fold(my - beta * mx, f64::max);
    Ok(HolderEstimate { beta, l_const: log_l.exp(), eps0, pair_count: pairs.len(), r2, zero_distances: false })
}

/// Hölder estimate of `x -> E(x)` from samples `(x, E(x))`.
pub fn estimate_holder(
    samples: &[(Point, Subspace)],
    metric: impl Fn(&[f64], &[f64]) -> f64 + Sync,
    eps0: f64,
) -> Result<(HolderEstimate, Vec<PairDistance>)> {
    let points: Vec<Point> = samples.iter().map(|s| s.0.clone()).collect();
    let fields: Vec<Subspace> = samples.iter().map(|s| s.1.clone()).collect();
    let pairs = pair_distances(&fields, &qualifying_pairs(&points, metric, eps0))?;
    Ok((fit_holder(&pairs, eps0)?, pairs))
}

/// Hypotheses of Brin's lemma: growth at most `C lambda^n` on `E`, at least
/// `mu^n / C` on a complement, and angle constant `d` between the two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrinParams {
    pub c: f64,
    pub lambda: f64,
    pub mu_rate: f64,
    pub a: f64,
    /// Angle constant: `max(|v|, |w|) <= d |v + w|`.
    pub d: f64,
    pub delta_pair: f64,
}

impl BrinParams {
    fn check(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < self.mu_rate && self.a > self.lambda) {
            return Err(Error::BadRates);
        }
        if !(self.c >= 1.0 && self.d > 0.0 && self.delta_pair > 0.0 && self.delta_pair <= 1.0) {
            return Err(Error::InvalidArgument("need C >= 1, d > 0 and delta in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn exponent(&self) -> f64 {
        (self.mu_rate / self.lambda).ln() / (self.a / self.lambda).ln()
    }

    fn log_bound(&self) -> f64 {
        (2.0 + self.d).ln() + 2.0 * self.c.ln() + (self.mu_rate / self.lambda).ln() + self.exponent() * self.delta_pair.ln()
    }
}

/// `(2 + d) C^2 (mu / lambda) delta^{log(mu/lambda) / log(a/lambda)}`
pub fn brin_bound(p: &BrinParams) -> Result<f64> {
    p.check()?;
    Ok(p.log_bound().exp())
}

/// Outcome of Brin's lemma on one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrinReport {
    pub observed: f64,
    pub bound: f64,
    pub ok: bool,
    /// Step count certifying the pair and the parameters used there.
    pub n: usize,
    pub params: BrinParams,
}

/// Level, epsilon, horizon and one-step Hölder growth shared by all pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrinSetup {
    pub level: f64,
    pub epsilon: f64,
    pub horizon: usize,
    /// `H` with `||A(x, n) - A(y, n)|| <= H^n rho^nu`.
    pub growth: f64,
}

/// Slack allowed on the bound for finite-horizon subspaces.
pub const BRIN_SLACK: f64 = 2.0;

/// `log ||A_x(n) - A_y(n)||` for `A_x(n) = A(x, n) S_x`, `n = 0..=horizon`,
/// with both products rescaled by a shared factor.
fn log_differences(sys: &CocycleSystem, x: &[f64], y: &[f64], sx: DMatrix<f64>, sy: DMatrix<f64>, horizon: usize) -> Vec<f64> {
    let (mut px, mut py) = (sx, sy);
    let (mut x, mut y) = (x.to_vec(), y.to_vec());
    let mut log_scale = 0.0;
    let mut out = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        out.push(spectral_norm(&(&px - &py)).ln() + log_scale);
        if n == horizon {
            break;
        }
        px = sys.a(&x) * px;
        py = sys.a(&y) * py;
        let s = px.amax().max(py.amax());
        if s > 0.0 {
            px /= s;
            py /= s;
            log_scale += s.ln();
        }
        x = sys.forward(&x);
        y = sys.forward(&y);
    }
    out
}

/// Best bound of Brin's lemma over `1 <= n <= horizon` given the measured
/// differences; `n = 0` is skipped since it only ever certifies `(2 + d) C^2`.
fn best_certificate(base: BrinParams, log_diff: &[f64]) -> Result<(usize, BrinParams)> {
    base.check_rates()?;
    let log_r = (base.lambda / base.a).ln();
    let log_a = base.a.ln();
    let mut best: Option<(usize, BrinParams, f64)> = None;
    for (n, &ld) in log_diff.iter().enumerate().skip(1) {
        let nf = n as f64;
        let lower = (nf + 1.0) * log_r;
        let log_delta = (ld - nf * log_a).max(lower + 1e-12 * lower.abs().max(1.0));
        if !(log_delta <= nf * log_r) {
            continue;
        }
        let p = BrinParams { delta_pair: log_delta.exp(), ..base };
        if p.delta_pair <= 0.0 {
            continue;
        }
        let lb = p.log_bound();
        if best.as_ref().is_none_or(|b| lb < b.2) {
            best = Some((n, p, lb));
        }
    }
    best.map(|(n, p, _)| (n, p)).ok_or(Error::PairTooFar)
}

impl BrinParams {
    fn check_rates(&self) -> Result<()> {
        BrinParams { delta_pair: 1.0, ..*self }.check()
    }
}

fn rates(spectrum: &SpectrumReport, i: usize, setup: &BrinSetup) -> Result<BrinParams> {
    if i == 0 || i >= spectrum.k() {
        return Err(Error::InvalidArgument(format!("split index {i} must lie in 1..{}", spectrum.k())));
    }
    if !spectrum.exponents[i].is_finite() {
        return Err(Error::InvalidArgument(format!("exponent {} is not finite", i + 1)));
    }
    let eps = setup.epsilon;
    let k = spectrum.k();
    Ok(BrinParams {
        c: setup.level.max(1.0),
        lambda: (spectrum.finite_exponent(i) + eps).exp(),
        mu_rate: (spectrum.finite_exponent(i + 1) - eps).exp(),
        a: (spectrum.finite_exponent(k) + eps).exp() * setup.growth.max(1.0),
        d: setup.level,
        delta_pair: 1.0,
    })
}

fn report(observed: f64, base: BrinParams, log_diff: &[f64]) -> Result<BrinReport> {
    let (n, params) = best_certificate(base, log_diff)?;
    let bound = brin_bound(&params)?;
    Ok(BrinReport { observed, bound, ok: observed <= BRIN_SLACK * bound, n, params })
}

/// Brin's lemma for `A_n = A(x, n)`, `B_n = A(y, n)` against the measured
/// distance `d(V_{<=i}(x), V_{<=i}(y))`.
pub fn brin_consistency(
    sys: &CocycleSystem,
    x: &[f64],
    y: &[f64],
    i: usize,
    spectrum: &SpectrumReport,
    setup: &BrinSetup,
) -> Result<BrinReport> {
    let base = rates(spectrum, i, setup)?;
    let ox = OrbitSplitting::compute(sys, x, spectrum, 0, 0, setup.horizon)?;
    let oy = OrbitSplitting::compute(sys, y, spectrum, 0, 0, setup.horizon)?;
    let observed = subspace_distance(&ox.slow_sum(0, i), &oy.slow_sum(0, i))?;
    let id = DMatrix::identity(sys.dim(), sys.dim());
    report(observed, base, &log_differences(sys, x, y, id.clone(), id, setup.horizon))
}

/// The single-space variant: with `P` the orthogonal projection onto
/// `F = E_i + ... + E_k`, Brin's lemma for `A_n = A(x, n) P(x)` compares
/// `F(x)^perp + E_i(x)` with the same space at `y`.
pub fn brin_consistency_projected(
    sys: &CocycleSystem,
    x: &[f64],
    y: &[f64],
    i: usize,
    spectrum: &SpectrumReport,
    setup: &BrinSetup,
) -> Result<BrinReport> {
    if i < 2 {
        return Err(Error::InvalidArgument("the projected check needs i >= 2".into()));
    }
    let base = rates(spectrum, i, setup)?;
    let side = |p: &[f64]| -> Result<(Subspace, DMatrix<f64>)> {
        let o = OrbitSplitting::compute(sys, p, spectrum, 0, 0, setup.horizon)?;
        let f = o.fast_sum(0, i - 1);
        Ok((direct_sum(&orthogonal_complement(&f), &o.space(0, i)?)?, f.projector()))
    };
    let (ex, px) = side(x)?;
    let (ey, py) = side(y)?;
    let observed = subspace_distance(&ex, &ey)?;
    report(observed, base, &log_differences(sys, x, y, px, py, setup.horizon))
}

/// Envelope of `||A(x, n) - A(y, n)|| <= C^n rho^nu` over a pair sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderGrowth {
    pub c_hat: f64,
    pub nu_hat: f64,
    /// `L` of the norm hypothesis `||A(x, n)|| <= L^n`.
    pub norm_bound: f64,
    /// `max over pairs of (||A(x, n) - A(y, n)|| / rho^nu)^{1/n}`, `n = 1..=n_max`.
    pub per_n: Vec<f64>,
}

/// Checks `||A(x, n)|| <= L^n` with `L = max(Lip f, max ||A||)` on the
/// sample, then scans the per-`n` envelopes at the declared exponent.
pub fn cocycle_holder_check(sys: &CocycleSystem, pairs: &[(Point, Point)], n_max: usize) -> Result<HolderGrowth> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be positive".into()));
    }
    let nu = sys.gen.holder_exp;
    let mut rhos = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let rho = sys.metric(x, y);
        if !(rho > 0.0 && rho <= 0.1) {
            return Err(Error::InvalidArgument(format!("pair distance {rho} outside (0, 0.1]")));
        }
        rhos.push(rho);
    }
    let sup_a = pairs.iter().flat_map(|(x, y)| [x, y]).map(|p| spectral_norm(&sys.a(p))).fold(0.0, f64::max);
    let l = sys.base.lipschitz().max(sup_a);
    let log_l = l.ln();

    let per_pair: Vec<Vec<f64>> = pairs
        .par_iter()
        .zip(rhos.par_iter())
        .map(|((x, y), &rho)| -> Result<Vec<f64>> {
            let id = DMatrix::identity(sys.dim(), sys.dim());
            let diffs = log_differences(sys, x, y, id, DMatrix::identity(sys.dim(), sys.dim()), n_max);
            for p in [x, y] {
                let mut prod = crate::linalg::ScaledProduct::identity(sys.dim());
                let mut q = p.clone();
                for n in 1..=n_max {
                    prod.left_mul(&sys.a(&q));
                    if prod.log_norm() > n as f64 * log_l * (1.0 + 1e-12) + 1e-12 {
                        return Err(Error::HypothesisFail);
                    }
                    q = sys.forward(&q);
                }
            }
            Ok((1..=n_max).map(|n| (diffs[n] - nu * rho.ln()) / n as f64).collect())
        })
        .collect::<Result<_>>()?;

    let per_n: Vec<f64> = (0..n_max).map(|j| per_pair.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max).exp()).collect();
    let c_hat = per_n.iter().copied().fold(1.0, f64::max);
    Ok(HolderGrowth { c_hat, nu_hat: nu, norm_bound: l, per_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::make_builtin;
    use crate::met::lyapunov_spectrum;
    use crate::subspace::DEFAULT_ORTHO_TOL;
    use nalgebra::DVector;
    use serde_json::json;

    fn profile(c: f64) -> RegularityProfile {
        RegularityProfile {
            point: vec![c],
            split_index: 1,
            epsilon: 0.1,
            c_upper: c,
            c_lower: 1.0,
            c_tilde: 1.0,
            k_direct: 1.0,
            k_lemma: 2.0,
            n_x: 1,
            horizon: 10,
        }
    }

    fn line(theta: f64) -> Subspace {
        Subspace::line(&DVector::from_vec(vec![theta.cos(), theta.sin()])).unwrap()
    }

    #[test]
    fn lambda_set_extremes_and_monotone() {
        let ps: Vec<_> = [1.0, 2.5, 3.0, 7.0, 1.5].iter().map(|&c| profile(c)).collect();
        assert_eq!(build_lambda_set(&ps, LEVEL_CAP).unwrap().empirical_measure, 1.0);
        assert_eq!(build_lambda_set(&ps, 0.5).unwrap().empirical_measure, 0.0);
        let mut prev = 0.0;
        for l in 1..10 {
            let s = build_lambda_set(&ps, l as f64).unwrap();
            assert!(s.empirical_measure >= prev);
            prev = s.empirical_measure;
        }
        let small = build_lambda_set(&ps, 2.0).unwrap();
        let big = build_lambda_set(&ps, 3.0).unwrap();
        assert!(small.indices.iter().all(|j| big.indices.contains(j)));
    }

    #[test]
    fn level_selection() {
        let ps: Vec<_> = [1.0, 2.5, 3.0, 2.0].iter().map(|&c| profile(c)).collect();
        assert_eq!(choose_level(&ps, 0.1).unwrap(), 3.0);
        assert_eq!(choose_level(&ps, 0.999).unwrap(), 1.0);
        let ps: Vec<_> = [5.0, 2.5, 3.0, 2.0].iter().map(|&c| profile(c)).collect();
        assert_eq!(choose_level(&ps, 0.999).unwrap(), 2.0);
        assert!(matches!(choose_level(&[profile(1e13)], 0.5), Err(Error::Unreachable(_))));
        assert!(matches!(choose_level(&[profile(f64::NAN)], 0.5), Err(Error::Unreachable(_))));
    }

    #[test]
    fn intersection_keeps_common_members() {
        let a: Vec<_> = [1.0, 5.0, 2.0, 9.0].iter().map(|&c| profile(c)).collect();
        let b: Vec<_> = [4.0, 1.0, 1.0, 9.0].iter().map(|&c| profile(c)).collect();
        let s = build_lambda_set(&a, 3.0).unwrap().intersect(&build_lambda_set(&b, 3.0).unwrap()).unwrap();
        assert_eq!(s.indices, vec![2]);
        assert_eq!(s.empirical_measure, 0.25);
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let pairs: Vec<_> = (0..50)
            .map(|j| {
                let rho = 1e-3 * (1.0 + j as f64);
                PairDistance { a: 0, b: j + 1, rho, d_subspace: rho.sqrt() }
            })
            .collect();
        let h = fit_holder(&pairs, 0.1).unwrap();
        assert!((h.beta - 0.5).abs() < 1e-6 && h.r2 >= 0.999999);
        assert!((h.l_const - 1.0).abs() < 1e-9);
        assert!(pairs.iter().all(|p| p.d_subspace <= h.l_const * p.rho.powf(h.beta) * (1.0 + 1e-12)));
    }

    #[test]
    fn constant_field_is_flagged() {
        let samples: Vec<_> = (0..40).map(|j| (vec![j as f64 * 1e-3], line(0.0))).collect();
        let (h, _) = estimate_holder(&samples, |x, y| (x[0] - y[0]).abs(), 0.05).unwrap();
        assert!(h.zero_distances && h.beta == 1.0);
    }

    #[test]
    fn too_few_pairs() {
        let samples: Vec<_> = (0..5).map(|j| (vec![j as f64], line(j as f64))).collect();
        assert!(matches!(
            estimate_holder(&samples, |x, y| (x[0] - y[0]).abs(), 0.5),
            Err(Error::TooFewPairs { found: 0, .. })
        ));
    }

    #[test]
    fn lipschitz_field_has_unit_exponent() {
        let samples: Vec<_> = (0..60).map(|j| (vec![j as f64 / 600.0], line(0.3 * j as f64 / 600.0))).collect();
        let (h, _) = estimate_holder(&samples, |x, y| (x[0] - y[0]).abs(), 0.05).unwrap();
        assert!((h.beta - 1.0).abs() < 1e-3, "{h:?}");
    }

    #[test]
    fn complement_field_gives_identical_distances() {
        let d = 3;
        let samples: Vec<(Point, Subspace)> = (0..40)
            .map(|j| {
                let t = j as f64 / 400.0;
                let b = DMatrix::from_column_slice(d, 1, &[1.0, t.sin(), t * t]);
                (vec![t], crate::subspace::orthonormalize(&b, DEFAULT_ORTHO_TOL).unwrap())
            })
            .collect();
        let comp: Vec<_> = samples.iter().map(|(p, e)| (p.clone(), orthogonal_complement(e))).collect();
        let m = |x: &[f64], y: &[f64]| (x[0] - y[0]).abs();
        let (h1, p1) = estimate_holder(&samples, m, 0.05).unwrap();
        let (h2, p2) = estimate_holder(&comp, m, 0.05).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn orthogonal_pair_inequality() {
        // E = line in the first two coordinates, F = its partner, E + F fixed plane
        for j in 0..50 {
            let (s, t) = (j as f64 * 0.01, j as f64 * 0.013 + 0.2);
            let e = |a: f64| Subspace::line(&DVector::from_vec(vec![a.cos(), a.sin(), 0.1 * a])).unwrap();
            let (ex, ey) = (e(s), e(t));
            let plane = |a: f64| {
                let b = DMatrix::from_column_slice(3, 2, &[a.cos(), a.sin(), 0.1 * a, 0.0, 0.3 * a, 1.0]);
                crate::subspace::orthonormalize(&b, DEFAULT_ORTHO_TOL).unwrap()
            };
            let (px, py) = (plane(s), plane(t));
            let f = |p: &Subspace, e: &Subspace| crate::subspace::intersect(p, &orthogonal_complement(e), 1e-8).unwrap();
            let (fx, fy) = (f(&px, &ex), f(&py, &ey));
            let lhs = subspace_distance(&fx, &fy).unwrap();
            let rhs = subspace_distance(&px, &py).unwrap() + subspace_distance(&ex, &ey).unwrap();
            assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn brin_formula() {
        let p = BrinParams { c: 1.0, lambda: 0.5, mu_rate: 2.0, a: 4.0, d: 2.0, delta_pair: 0.01 };
        let b = brin_bound(&p).unwrap();
        assert!((b - 16.0 * 0.01f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((b - 0.74266).abs() < 1e-5);
        assert!((p.exponent() - 2.0 / 3.0).abs() < 1e-15);
        let one = brin_bound(&BrinParams { delta_pair: 1.0, ..p }).unwrap();
        assert!((one - 16.0).abs() < 1e-12);
        let doubled = brin_bound(&BrinParams { c: 2.0, ..p }).unwrap();
        assert!((doubled / b - 4.0).abs() < 1e-12);
        assert!(brin_bound(&BrinParams { delta_pair: 0.02, ..p }).unwrap() > b);
        assert!(matches!(brin_bound(&BrinParams { mu_rate: 0.4, ..p }), Err(Error::BadRates)));
        assert!(matches!(brin_bound(&BrinParams { a: 0.5, ..p }), Err(Error::BadRates)));
    }

    fn tri_setup() -> (CocycleSystem, SpectrumReport, BrinSetup) {
        let sys = make_builtin("rotation_triangular", &Default::default(), 4).unwrap();
        let s = lyapunov_spectrum(&sys, &[0.2], 2000, 0.05, -30.0).unwrap();
        (sys, s, BrinSetup { level: 5.0, epsilon: 0.15, horizon: 200, growth: 2.0 })
    }

    #[test]
    fn brin_identical_points() {
        let (sys, s, setup) = tri_setup();
        let r = brin_consistency(&sys, &[0.3], &[0.3], 1, &s, &setup).unwrap();
        assert_eq!(r.observed, 0.0);
        assert!(r.ok && r.bound > 0.0);
    }

    #[test]
    fn brin_constant_cocycle() {
        let sys = make_builtin("constant", json!({"A": "2,1;0,0.5"}).as_object().unwrap(), 0).unwrap();
        let s = lyapunov_spectrum(&sys, &[0.0], 100, 0.05, -30.0).unwrap();
        let setup = BrinSetup { level: 3.0, epsilon: 0.1, horizon: 50, growth: 1.0 };
        let r = brin_consistency(&sys, &[0.0], &[0.0], 1, &s, &setup).unwrap();
        assert!(r.observed == 0.0 && r.ok);
    }

    #[test]
    fn brin_nearby_rotation_points() {
        let (sys, s, setup) = tri_setup();
        let r = brin_consistency(&sys, &[0.3], &[0.301], 1, &s, &setup).unwrap();
        assert!(r.observed > 0.0 && r.ok, "{r:?}");
        assert!(r.params.exponent() > 0.0 && r.params.exponent() <= 1.0);
    }

    #[test]
    fn projected_check_on_three_exponents() {
        let sys = make_builtin("cat_generic", &Default::default(), 2).unwrap();
        let s = lyapunov_spectrum(&sys, &[0.3, 0.6], 2000, 0.05, -30.0).unwrap();
        assert_eq!(s.k(), 3);
        let setup = BrinSetup { level: 50.0, epsilon: 0.05, horizon: 200, growth: 3.0 };
        let r = brin_consistency_projected(&sys, &[0.3, 0.6], &[0.3, 0.6], 2, &s, &setup).unwrap();
        assert_eq!(r.observed, 0.0);
        assert!(brin_consistency_projected(&sys, &[0.3, 0.6], &[0.3, 0.6], 1, &s, &setup).is_err());
    }

    #[test]
    fn holder_growth_on_rotation() {
        let (sys, _, _) = tri_setup();
        let pts = sys.sample_points(200, 7);
        let pairs: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(j, p)| (p.clone(), vec![(p[0] + 1e-3 * (1.0 + j as f64 / 200.0)).fract()]))
            .collect();
        let g = cocycle_holder_check(&sys, &pairs, 20).unwrap();
        assert!(g.c_hat.is_finite() && g.c_hat >= 1.0);
        assert_eq!(g.nu_hat, sys.gen.holder_exp);
        // one step is the generator's own Hölder bound
        assert!(g.per_n[0] <= 1.05 * sys.gen.holder_const);
    }

    #[test]
    fn holder_growth_constant_generator() {
        let sys = make_builtin("constant", json!({"A": "2,0;0,0.5"}).as_object().unwrap(), 0).unwrap();
        let g = cocycle_holder_check(&sys, &[(vec![0.0], vec![0.05])], 5).unwrap();
        assert_eq!(g.c_hat, 1.0);
        assert_eq!(g.nu_hat, sys.gen.holder_exp);
    }

    #[test]
    fn far_pairs_are_rejected() {
        let (sys, _, _) = tri_setup();
        assert!(cocycle_holder_check(&sys, &[(vec![0.0], vec![0.4])], 5).is_err());
    }
}
