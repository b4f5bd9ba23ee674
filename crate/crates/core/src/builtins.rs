//! Built-in test systems.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use serde_json::{Map, Value};

use crate::cocycle::{BaseMap, CocycleSystem, Generator, Point, SystemSpec};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 5] = ["constant", "rotation_triangular", "rotation_stochastic", "cat_rank_deficient", "cat_generic"];

/// Golden-mean rotation number.
pub const GOLDEN_ALPHA: f64 = 0.618_033_988_749_894_9;

fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn wrap_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Single fixed point; the invariant measure is the point mass.
pub struct FixedPoint;

impl BaseMap for FixedPoint {
    fn state_dim(&self) -> usize {
        1
    }
    fn forward(&self, x: &[f64]) -> Point {
        x.to_vec()
    }
    fn backward(&self, x: &[f64]) -> Point {
        x.to_vec()
    }
    fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        (x[0] - y[0]).abs()
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn sample(&self, _rng: &mut dyn RngCore) -> Point {
        vec![0.0]
    }
}

/// `x -> x + alpha mod 1` with the arc-length metric.
pub struct CircleRotation {
    pub alpha: f64,
}

impl BaseMap for CircleRotation {
    fn state_dim(&self) -> usize {
        1
    }
    fn forward(&self, x: &[f64]) -> Point {
        vec![wrap_unit(x[0] + self.alpha)]
    }
    fn backward(&self, x: &[f64]) -> Point {
        vec![wrap_unit(x[0] - self.alpha)]
    }
    fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        wrap_diff(x[0], y[0])
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        vec![rng.gen::<f64>()]
    }
}

const CAT_BITS: u32 = 50;
const CAT_SCALE: f64 = (1u64 << CAT_BITS) as f64;
const CAT_MASK: u64 = (1u64 << CAT_BITS) - 1;

/// Arnold's cat map `(u, v) -> (2u + v, u + v) mod 1` with the flat torus
/// metric.
///
/// Points are snapped to the lattice `2^-50 Z^2` and iterated in integer
/// arithmetic, so forward and backward orbits are exact inverses of each
/// other despite the map being hyperbolic.
pub struct CatMap;

impl CatMap {
    fn to_lattice(x: &[f64]) -> (u64, u64) {
        let snap = |t: f64| ((wrap_unit(t) * CAT_SCALE).round() as u64) & CAT_MASK;
        (snap(x[0]), snap(x[1]))
    }

    fn from_lattice(u: u64, v: u64) -> Point {
        vec![u as f64 / CAT_SCALE, v as f64 / CAT_SCALE]
    }
}

impl BaseMap for CatMap {
    fn state_dim(&self) -> usize {
        2
    }
    fn forward(&self, x: &[f64]) -> Point {
        let (u, v) = Self::to_lattice(x);
        Self::from_lattice((2 * u + v) & CAT_MASK, (u + v) & CAT_MASK)
    }
    fn backward(&self, x: &[f64]) -> Point {
        // inverse matrix [[1, -1], [-1, 2]]
        let (u, v) = Self::to_lattice(x);
        let m = CAT_MASK + 1;
        Self::from_lattice((u + m - v) & CAT_MASK, (2 * v + m - u) & CAT_MASK)
    }
    fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        wrap_diff(x[0], y[0]).hypot(wrap_diff(x[1], y[1]))
    }
    fn lipschitz(&self) -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        let mut draw = || (rng.next_u64() >> (64 - CAT_BITS)) as f64 / CAT_SCALE;
        let u = draw();
        let v = draw();
        vec![u, v]
    }
}

/// Parses `"a,b;c,d"` (rows separated by `;`) into a square matrix.
pub fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| {
            r.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::BadParams(format!("bad matrix entry `{}`", t.trim()))))
                .collect()
        })
        .collect::<Result<_>>()?;
    matrix_from_rows(&rows)
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::BadParams("matrix must be square and nonempty".into()));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::BadParams("matrix entries must be finite".into()));
    }
    Ok(m)
}

fn matrix_param(v: &Value) -> Result<DMatrix<f64>> {
    match v {
        Value::String(s) => parse_matrix(s),
        Value::Array(rows) => {
            let rows = rows
                .iter()
                .map(|r| {
                    r.as_array()
                        .ok_or_else(|| Error::BadParams("A must be an array of rows".into()))?
                        .iter()
                        .map(|e| e.as_f64().ok_or_else(|| Error::BadParams("A entries must be numbers".into())))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            matrix_from_rows(&rows)
        }
        _ => Err(Error::BadParams("A must be a string like \"2,0;0,0.5\" or an array of rows".into())),
    }
}

fn check_keys(name: &str, params: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::BadParams(format!("`{name}` does not take parameter `{k}`"))),
        None => Ok(()),
    }
}

/// `int_0^1 log(a + b sin 2 pi x) dx` for `a > |b|`.
pub fn mean_log_sinusoid(a: f64, b: f64) -> f64 {
    ((a + (a * a - b * b).sqrt()) / 2.0).ln()
}

fn constant(params: &Map<String, Value>) -> Result<(Arc<dyn BaseMap>, Generator)> {
    check_keys("constant", params, &["A"])?;
    let a = params.get("A").ok_or_else(|| Error::BadParams("`constant` needs parameter `A`".into())).and_then(matrix_param)?;
    let d = a.nrows();
    // any positive constant is an honest Holder bound for a constant generator
    Ok((Arc::new(FixedPoint), Generator::new(d, 1.0, 1.0, move |_| a.clone())))
}

fn rotation_triangular(params: &Map<String, Value>) -> Result<(Arc<dyn BaseMap>, Generator)> {
    check_keys("rotation_triangular", params, &["target_rates"])?;
    let (sa, sb) = match params.get("target_rates") {
        None => (1.0, 1.0),
        Some(v) => {
            let r: Vec<f64> = serde_json::from_value(v.clone()).map_err(|_| Error::BadParams("target_rates must be [lo, hi]".into()))?;
            if r.len() != 2 || !(r[0] < r[1]) || !r.iter().all(|t| t.is_finite()) {
                return Err(Error::BadParams("target_rates must be [lo, hi] with lo < hi".into()));
            }
            ((r[1] - mean_log_sinusoid(1.5, 0.4)).exp(), (r[0] - mean_log_sinusoid(0.5, 0.1)).exp())
        }
    };
    // ||dA|| <= frob; (ds)^2 + (dc)^2 <= (2 pi rho)^2
    let c = TAU * (0.16 * sa * sa).max(0.09 + 0.01 * sb * sb).sqrt();
    let gen = Generator::new(2, c, 1.0, move |x| {
        let (s, co) = (TAU * x[0]).sin_cos();
        DMatrix::from_row_slice(2, 2, &[sa * (1.5 + 0.4 * s), 0.3 * co, 0.0, sb * (0.5 + 0.1 * co)])
    });
    Ok((Arc::new(CircleRotation { alpha: GOLDEN_ALPHA }), gen))
}

fn rotation_stochastic(params: &Map<String, Value>) -> Result<(Arc<dyn BaseMap>, Generator)> {
    check_keys("rotation_stochastic", params, &[])?;
    // dA = (1, -1)^T (-dp, dq), so ||dA|| = sqrt(2) |(dp, dq)| <= sqrt(2) 0.2 (2 pi rho)
    let c = 0.4 * std::f64::consts::PI * std::f64::consts::SQRT_2;
    let gen = Generator::new(2, c, 1.0, |x| {
        let (s, co) = (TAU * x[0]).sin_cos();
        let p = 0.25 + 0.2 * s;
        let q = 0.35 + 0.2 * co;
        DMatrix::from_row_slice(2, 2, &[1.0 - p, q, p, 1.0 - q])
    });
    Ok((Arc::new(CircleRotation { alpha: GOLDEN_ALPHA }), gen))
}

/// Unit vector spanning the range of the rank-one `cat_rank_deficient` generator.
pub fn cat_rank_deficient_direction(x: &[f64]) -> [f64; 2] {
    let theta = 0.5 * (TAU * x[0]).sin();
    [theta.cos(), theta.sin()]
}

fn cat_rank_deficient(params: &Map<String, Value>) -> Result<(Arc<dyn BaseMap>, Generator)> {
    check_keys("cat_rank_deficient", params, &[])?;
    // A = 2 r r^T with r = (cos t, sin t); ||dA|| = 2 |sin dt| <= 2 * 0.5 * 2 pi rho
    let gen = Generator::new(2, TAU, 1.0, |x| {
        let [c, s] = cat_rank_deficient_direction(x);
        DMatrix::from_row_slice(2, 2, &[2.0 * c * c, 2.0 * c * s, 2.0 * c * s, 2.0 * s * s])
    });
    Ok((Arc::new(CatMap), gen))
}

const GENERIC_K: [[f64; 3]; 3] = [[1.0, 0.0, 2.0], [1.0, 1.0, 0.0], [0.0, 2.0, 1.0]];
const GENERIC_L: [[f64; 3]; 3] = [[0.0, 1.0, 1.0], [2.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
const GENERIC_PHASE: [[f64; 3]; 3] = [[0.0, 0.7, 1.9], [2.3, 0.4, 1.1], [0.9, 2.8, 0.2]];
const GENERIC_DIAG: [f64; 3] = [2.0, 1.0, 0.5];

fn cat_generic(params: &Map<String, Value>) -> Result<(Arc<dyn BaseMap>, Generator)> {
    check_keys("cat_generic", params, &[])?;
    let freq: f64 = (0..3).flat_map(|i| (0..3).map(move |j| GENERIC_K[i][j].powi(2) + GENERIC_L[i][j].powi(2))).sum();
    let c = 0.1 * TAU * freq.sqrt();
    let gen = Generator::new(3, c, 1.0, |x| {
        DMatrix::from_fn(3, 3, |i, j| {
            let base = if i == j { GENERIC_DIAG[i] } else { 0.0 };
            base + 0.1 * (TAU * (GENERIC_K[i][j] * x[0] + GENERIC_L[i][j] * x[1]) + GENERIC_PHASE[i][j]).sin()
        })
    });
    Ok((Arc::new(CatMap), gen))
}

pub fn make_builtin(name: &str, params: &Map<String, Value>, seed: u64) -> Result<CocycleSystem> {
    let (base, gen) = match name {
        "constant" => constant(params)?,
        "rotation_triangular" => rotation_triangular(params)?,
        "rotation_stochastic" => rotation_stochastic(params)?,
        "cat_rank_deficient" => cat_rank_deficient(params)?,
        "cat_generic" => cat_generic(params)?,
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    let mut sys = CocycleSystem::new(base, gen, name, seed);
    sys.spec = Some(SystemSpec { name: name.to_string(), params: params.clone(), seed });
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{singular_values, spectral_norm};
    use serde_json::json;

    fn all_builtins() -> Vec<CocycleSystem> {
        BUILTIN_NAMES
            .iter()
            .map(|n| {
                let p = if *n == "constant" { json!({"A": "2,1;0,0.5"}) } else { json!({}) };
                make_builtin(n, p.as_object().unwrap(), 11).unwrap()
            })
            .collect()
    }

    #[test]
    fn unknown_and_bad_params() {
        assert!(matches!(make_builtin("henon", &Map::new(), 0), Err(Error::UnknownSystem(_))));
        assert!(matches!(make_builtin("constant", &Map::new(), 0), Err(Error::BadParams(_))));
        let bad = json!({"A": "1,2;3"});
        assert!(matches!(make_builtin("constant", bad.as_object().unwrap(), 0), Err(Error::BadParams(_))));
        let extra = json!({"speed": 2});
        assert!(matches!(make_builtin("cat_generic", extra.as_object().unwrap(), 0), Err(Error::BadParams(_))));
    }

    #[test]
    fn matrix_param_accepts_rows() {
        let a = matrix_param(&json!([[2.0, 0.0], [0.0, 0.5]])).unwrap();
        assert_eq!(a, parse_matrix("2,0;0,0.5").unwrap());
    }

    #[test]
    fn constant_generator_is_constant() {
        let sys = make_builtin("constant", json!({"A": "2,0;0,0.5"}).as_object().unwrap(), 0).unwrap();
        let a0 = sys.a(&[0.0]);
        for x in sys.sample_points(10, 0) {
            assert_eq!(sys.a(&x), a0);
        }
    }

    #[test]
    fn stochastic_columns_sum_to_one() {
        let sys = make_builtin("rotation_stochastic", &Map::new(), 5).unwrap();
        for x in sys.sample_points(1000, 0) {
            let a = sys.a(&x);
            for j in 0..2 {
                assert!((a[(0, j)] + a[(1, j)] - 1.0).abs() <= f64::EPSILON);
            }
        }
    }

    #[test]
    fn rank_deficient_generator_has_rank_one() {
        let sys = make_builtin("cat_rank_deficient", &Map::new(), 5).unwrap();
        for x in sys.sample_points(1000, 0) {
            assert!(singular_values(&sys.a(&x))[1] < 1e-14);
        }
    }

    #[test]
    fn closed_form_log_integral_matches_quadrature() {
        let n = 100_000;
        let q: f64 = (0..n).map(|k| (1.5 + 0.4 * (TAU * (k as f64 + 0.5) / n as f64).sin()).ln()).sum::<f64>() / n as f64;
        assert!((q - mean_log_sinusoid(1.5, 0.4)).abs() < 1e-10);
    }

    #[test]
    fn target_rates_rescale_diagonal() {
        let p = json!({"target_rates": [-0.4, 0.4]});
        let sys = make_builtin("rotation_triangular", p.as_object().unwrap(), 0).unwrap();
        let n = 100_000;
        let (mut la, mut lb) = (0.0, 0.0);
        for k in 0..n {
            let a = sys.a(&[(k as f64 + 0.5) / n as f64]);
            la += a[(0, 0)].ln();
            lb += a[(1, 1)].ln();
        }
        assert!((la / n as f64 - 0.4).abs() < 1e-9 && (lb / n as f64 + 0.4).abs() < 1e-9);
    }

    #[test]
    fn bases_are_invertible() {
        for sys in all_builtins() {
            for x in sys.sample_points(1000, 2) {
                assert!(sys.metric(&sys.forward(&sys.backward(&x)), &x) <= 1e-12, "{}", sys.label);
                assert!(sys.metric(&sys.backward(&sys.forward(&x)), &x) <= 1e-12, "{}", sys.label);
            }
        }
    }

    #[test]
    fn cat_orbits_are_exactly_reversible() {
        let sys = make_builtin("cat_generic", &Map::new(), 0).unwrap();
        let x = sys.sample_points(1, 0).remove(0);
        assert_eq!(sys.iterate(&sys.iterate(&x, -300), 300), x);
    }

    #[test]
    fn metric_axioms_on_samples() {
        for sys in all_builtins() {
            let pts = sys.sample_points(300, 3);
            for w in pts.windows(3) {
                let (x, y, z) = (&w[0], &w[1], &w[2]);
                assert_eq!(sys.metric(x, x), 0.0);
                assert_eq!(sys.metric(x, y), sys.metric(y, x));
                assert!(sys.metric(x, z) <= sys.metric(x, y) + sys.metric(y, z) + 1e-12);
            }
        }
    }

    #[test]
    fn declared_lipschitz_constants_hold() {
        for sys in all_builtins() {
            let mut rng = sys.rng(4);
            for _ in 0..10_000 {
                let x = sys.base.sample(&mut rng);
                let y: Point = x.iter().map(|t| wrap_unit(t + 1e-3 * (rng.gen::<f64>() - 0.5))).collect();
                let lhs = sys.metric(&sys.forward(&x), &sys.forward(&y));
                assert!(lhs <= sys.base.lipschitz() * sys.metric(&x, &y) * (1.0 + 1e-9) + 1e-14, "{}", sys.label);
            }
        }
    }

    #[test]
    fn declared_holder_data_is_honest() {
        for sys in all_builtins() {
            let mut rng = sys.rng(6);
            for _ in 0..1000 {
                let x = sys.base.sample(&mut rng);
                let y: Point = x.iter().map(|t| wrap_unit(t + 0.02 * (rng.gen::<f64>() - 0.5))).collect();
                let rho = sys.metric(&x, &y);
                let diff = spectral_norm(&(sys.a(&x) - sys.a(&y)));
                assert!(diff <= 1.05 * sys.gen.holder_const * rho.powf(sys.gen.holder_exp) + 1e-15, "{}", sys.label);
            }
        }
    }

    #[test]
    fn log_norm_integrability_is_batch_stable() {
        for sys in all_builtins() {
            let mean = |stream| {
                let pts = sys.sample_points(10_000, stream);
                pts.iter().map(|x| spectral_norm(&sys.a(x)).ln().max(0.0)).sum::<f64>() / pts.len() as f64
            };
            let (m1, m2) = (mean(10), mean(11));
            assert!(m1.is_finite() && m2.is_finite());
            assert!((m1 - m2).abs() <= 0.01 * m1.abs().max(m2.abs()), "{}: {m1} vs {m2}", sys.label);
        }
    }
}
