#![allow(dead_code)]

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use oseledets::builtins::make_builtin;
use oseledets::cocycle::CocycleSystem;
use oseledets::subspace::{orthonormalize, Subspace, DEFAULT_ORTHO_TOL};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

pub const DIAG: &str = "2,0;0,0.5";
pub const UPPER: &str = "2,1;0,0.5";

pub fn constant(a: &str) -> CocycleSystem {
    make_builtin("constant", json!({ "A": a }).as_object().unwrap(), 0).unwrap()
}

pub fn builtin(name: &str, seed: u64) -> CocycleSystem {
    make_builtin(name, &Default::default(), seed).unwrap()
}

/// Every built-in, with both test matrices for `constant`.
pub fn all_builtins(seed: u64) -> Vec<(String, CocycleSystem)> {
    let mut v = vec![("constant diag".to_string(), constant(DIAG)), ("constant upper".to_string(), constant(UPPER))];
    for n in ["rotation_triangular", "rotation_stochastic", "cat_rank_deficient", "cat_generic"] {
        v.push((n.to_string(), builtin(n, seed)));
    }
    v
}

/// Midpoint rule for `int_0^1 g`.
pub fn midpoint(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    (0..n).map(|j| g((j as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64
}

/// Exponents of `rotation_triangular` from the diagonal entries, ascending.
pub fn triangular_oracle(n: usize) -> [f64; 2] {
    let lo = midpoint(n, |x| (0.5 + 0.1 * (TAU * x).cos()).ln());
    let hi = midpoint(n, |x| (1.5 + 0.4 * (TAU * x).sin()).ln());
    [lo, hi]
}

/// Lower exponent of `rotation_stochastic`: the sum-zero line is invariant
/// with factor `1 - p - q`.
pub fn stochastic_oracle(n: usize) -> f64 {
    midpoint(n, |x| {
        let p = 0.25 + 0.2 * (TAU * x).sin();
        let q = 0.35 + 0.2 * (TAU * x).cos();
        (1.0 - p - q).abs().ln()
    })
}

/// Finite exponent of `cat_rank_deficient`: `log 2 + E log |cos(t(f x) - t(x))|`
/// with `t(x) = sin(2 pi x_0) / 2`; under Lebesgue measure `x_0` and
/// `(f x)_0 = 2 x_0 + x_1` are independent uniforms.
pub fn rank_deficient_oracle(n: usize) -> f64 {
    let t = |u: f64| 0.5 * (TAU * u).sin();
    let inner = |u: f64| midpoint(n, |v| (t(v) - t(u)).cos().abs().ln());
    2f64.ln() + midpoint(n, inner)
}

pub fn gaussian_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn random_subspace(rng: &mut impl Rng, d: usize, m: usize) -> Subspace {
    orthonormalize(&gaussian_matrix(rng, d, m), DEFAULT_ORTHO_TOL).unwrap()
}

pub fn random_unit(rng: &mut impl Rng, s: &Subspace) -> DVector<f64> {
    let v = s.basis() * DVector::from_fn(s.dim(), |_, _| rng.sample(StandardNormal));
    let n = v.norm();
    v / n
}

/// `d(v, S)` as the residual of the orthogonal projection onto the basis.
pub fn dist_to(v: &DVector<f64>, s: &Subspace) -> f64 {
    let b = s.basis();
    (v - b * (b.transpose() * v)).norm()
}

/// `max(sup_{w in W} d(w, V), sup_{v in V} d(v, W))` over random unit
/// vectors plus the maximisers of `d(., V)` on `W` (and vice versa), taken
/// from the top eigenvector of `B_W^T (I - P_V) B_W`.
pub fn sup_form_distance(rng: &mut impl Rng, v: &Subspace, w: &Subspace, samples: usize) -> f64 {
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        best = best.max(dist_to(&random_unit(rng, w), v)).max(dist_to(&random_unit(rng, v), w));
    }
    for (a, b) in [(v, w), (w, v)] {
        let r = b.basis() - a.basis() * (a.basis().transpose() * b.basis());
        let eig = (r.transpose() * &r).symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let u = b.basis() * eig.eigenvectors.column(top);
        best = best.max(dist_to(&(&u / u.norm()), a));
    }
    best
}

/// `min ||v + w||` over unit `v` in `V`, `w` in `W` by random search with
/// shrinking local perturbations.
pub fn brute_force_gap(rng: &mut impl Rng, v: &Subspace, w: &Subspace) -> f64 {
    let eval = |c: &DVector<f64>, e: &DVector<f64>| {
        let a = v.basis() * c / c.norm();
        let b = w.basis() * e / e.norm();
        (a + b).norm()
    };
    let normal = |rng: &mut dyn rand::RngCore, n: usize| DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut best = (normal(rng, v.dim()), normal(rng, w.dim()));
    let mut f = eval(&best.0, &best.1);
    for _ in 0..300 {
        let cand = (normal(rng, v.dim()), normal(rng, w.dim()));
        let g = eval(&cand.0, &cand.1);
        if g < f {
            (best, f) = (cand, g);
        }
    }
    let iters = 4000;
    for it in 0..iters {
        let step = 0.3 * (1e-5f64).powf(it as f64 / iters as f64);
        let c = &best.0 / best.0.norm() + normal(rng, v.dim()) * step;
        let e = &best.1 / best.1.norm() + normal(rng, w.dim()) * step;
        let g = eval(&c, &e);
        if g < f {
            (best, f) = ((c, e), g);
        }
    }
    f
}
