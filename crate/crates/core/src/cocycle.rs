//! Matrix cocycles over invertible base maps.
//!
//! A system couples a base map `f` (with metric, Lipschitz constant and a
//! sampler for its invariant measure) to a matrix generator `A(x)`. The
//! cocycle is `A(x, n) = A(f^{n-1} x) ... A(f x) A(x)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chart coordinates of a base point.
pub type Point = Vec<f64>;

/// Entries beyond this magnitude are treated as overflow by [`compose`].
pub const OVERFLOW_LIMIT: f64 = 1e300;

pub trait BaseMap: Send + Sync {
    fn state_dim(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Point;
    fn backward(&self, x: &[f64]) -> Point;
    fn metric(&self, x: &[f64], y: &[f64]) -> f64;
    /// Declared `L` with `rho(f x, f y) <= L rho(x, y)`.
    fn lipschitz(&self) -> f64;
    fn sample(&self, rng: &mut dyn RngCore) -> Point;
}

pub type GeneratorFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

#[derive(Clone)]
pub struct Generator {
    pub dim: usize,
    pub eval: Arc<GeneratorFn>,
    /// Declared `C` with `||A(x) - A(y)|| <= C rho(x, y)^nu`.
    pub holder_const: f64,
    pub holder_exp: f64,
}

impl Generator {
    pub fn new(dim: usize, holder_const: f64, holder_exp: f64, eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { dim, eval: Arc::new(eval), holder_const, holder_exp }
    }

    pub fn at(&self, x: &[f64]) -> DMatrix<f64> {
        (self.eval)(x)
    }
}

/// Name, parameters and seed of a built-in system, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
}

impl SystemSpec {
    pub fn build(&self) -> Result<CocycleSystem> {
        crate::builtins::make_builtin(&self.name, &self.params, self.seed)
    }
}

#[derive(Clone)]
pub struct CocycleSystem {
    pub base: Arc<dyn BaseMap>,
    pub gen: Generator,
    pub label: String,
    pub seed: u64,
    /// Set when the system came from [`SystemSpec::build`].
    pub spec: Option<SystemSpec>,
    pub is_adjoint: bool,
}

impl fmt::Debug for CocycleSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CocycleSystem")
            .field("label", &self.label)
            .field("dim", &self.gen.dim)
            .field("state_dim", &self.base.state_dim())
            .field("is_adjoint", &self.is_adjoint)
            .finish()
    }
}

impl CocycleSystem {
    pub fn new(base: Arc<dyn BaseMap>, gen: Generator, label: impl Into<String>, seed: u64) -> Self {
        Self { base, gen, label: label.into(), seed, spec: None, is_adjoint: false }
    }

    pub fn dim(&self) -> usize {
        self.gen.dim
    }

    pub fn a(&self, x: &[f64]) -> DMatrix<f64> {
        self.gen.at(x)
    }

    pub fn forward(&self, x: &[f64]) -> Point {
        self.base.forward(x)
    }

    pub fn backward(&self, x: &[f64]) -> Point {
        self.base.backward(x)
    }

    pub fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        self.base.metric(x, y)
    }

    /// Independent, reproducible random stream number `stream` for this seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// `count` points drawn from the invariant measure on stream `stream`.
    pub fn sample_points(&self, count: usize, stream: u64) -> Vec<Point> {
        let mut rng = self.rng(stream);
        (0..count).map(|_| self.base.sample(&mut rng)).collect()
    }

    /// `f^n x` for `n >= 0`, `f^{-|n|} x` otherwise.
    pub fn iterate(&self, x: &[f64], n: i64) -> Point {
        let mut p = x.to_vec();
        for _ in 0..n.unsigned_abs() {
            p = if n >= 0 { self.forward(&p) } else { self.backward(&p) };
        }
        p
    }
}

/// `A(x, n)`; errors once an entry passes [`OVERFLOW_LIMIT`].
pub fn compose(sys: &CocycleSystem, x: &[f64], n: usize) -> Result<DMatrix<f64>> {
    let d = sys.dim();
    let mut prod = DMatrix::identity(d, d);
    let mut p = x.to_vec();
    for step in 0..n {
        prod = sys.a(&p) * prod;
        if !prod.iter().all(|v| v.is_finite() && v.abs() <= OVERFLOW_LIMIT) {
            return Err(Error::NonFiniteMatrix(step + 1));
        }
        p = sys.forward(&p);
    }
    Ok(prod)
}

/// `[f^{-n_back} x, ..., x, ..., f^{n_fwd} x]`
pub fn orbit(sys: &CocycleSystem, x: &[f64], n_back: usize, n_fwd: usize) -> Vec<Point> {
    let mut back = Vec::with_capacity(n_back);
    let mut p = x.to_vec();
    for _ in 0..n_back {
        p = sys.backward(&p);
        back.push(p.clone());
    }
    back.reverse();
    let mut out = back;
    out.reserve(n_fwd + 1);
    let mut p = x.to_vec();
    out.push(p.clone());
    for _ in 0..n_fwd {
        p = sys.forward(&p);
        out.push(p.clone());
    }
    out
}

struct Reversed(Arc<dyn BaseMap>);

impl BaseMap for Reversed {
    fn state_dim(&self) -> usize {
        self.0.state_dim()
    }
    fn forward(&self, x: &[f64]) -> Point {
        self.0.backward(x)
    }
    fn backward(&self, x: &[f64]) -> Point {
        self.0.forward(x)
    }
    fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0.metric(x, y)
    }
    fn lipschitz(&self) -> f64 {
        // built-in bases have inverses with the same constant
        self.0.lipschitz()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Point {
        self.0.sample(rng)
    }
}

/// The cocycle over `f^{-1}` generated by `x -> A(f^{-1} x)^T`.
pub fn adjoint_cocycle(sys: &CocycleSystem) -> CocycleSystem {
    let base = sys.base.clone();
    let eval = sys.gen.eval.clone();
    let adj_eval = move |x: &[f64]| eval(&base.backward(x)).transpose();
    // composing with the Lipschitz inverse keeps the exponent, scales C by L^nu
    let c = sys.gen.holder_const * sys.base.lipschitz().powf(sys.gen.holder_exp);
    CocycleSystem {
        base: Arc::new(Reversed(sys.base.clone())),
        gen: Generator { dim: sys.gen.dim, eval: Arc::new(adj_eval), holder_const: c, holder_exp: sys.gen.holder_exp },
        label: format!("{}*", sys.label),
        seed: sys.seed,
        spec: sys.spec.clone(),
        is_adjoint: !sys.is_adjoint,
    }
}
