use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains NaN or infinite entries")]
    NonFiniteInput,
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("subspaces are not transverse (intersection of dimension {0})")]
    NotTransverse(usize),
    #[error("subspaces intersect nontrivially (largest principal cosine {0})")]
    DegenerateIntersection(f64),
    #[error("subspace basis is not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),

    #[error("cocycle product is not finite after {0} steps; use the log-scaled routines")]
    NonFiniteMatrix(usize),
    #[error("unknown built-in system `{0}`")]
    UnknownSystem(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exponent gap {gap:.4} lies in [tol, 2 tol) with tol = {tol}; increase horizon")]
    ClusterAmbiguity { gap: f64, tol: f64 },
    #[error("Oseledets space {index} has dimension {found}, expected {expected}; increase horizon")]
    DimensionCollapse {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("invariant vector has entries of both signs (most negative {0:e})")]
    SignDefect(f64),
    #[error("generator is not column-stochastic at the base point")]
    NotStochastic,

    #[error("restricted cocycle on the fast space is singular at step {0}")]
    SingularRestriction(usize),
    #[error("exponent gap too small for epsilon: need lo + 3 eps <= hi - 2 eps")]
    GapTooSmall,
    #[error("no separation time found below the cap {0}")]
    NoSuchN(usize),
    #[error("exponent {0} is within the cluster tolerance of zero")]
    NotHyperbolic(f64),

    #[error("only {found} qualifying pairs, need at least {needed}")]
    TooFewPairs { found: usize, needed: usize },
    #[error("bad rates: need 0 < lambda < mu and a > lambda")]
    BadRates,
    #[error("no (delta, n) certifies the pair within the horizon")]
    PairTooFar,
    #[error("norm bound ||A(x,n)|| <= L^n fails on the sample")]
    HypothesisFail,
    #[error("no level below {0:e} reaches measure > 1 - delta")]
    Unreachable(f64),

    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
