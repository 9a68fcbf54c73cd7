use thiserror::Error;

/// Every failure the numerical layers can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot normalise the zero vector")]
    ZeroVector,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("singular configuration: bodies {i} and {j} have separation term {gap:e} (time {t})")]
    SingularConfiguration { i: usize, j: usize, gap: f64, t: f64 },

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("bodies {i} and {j} coincide")]
    CoincidentBodies { i: usize, j: usize },

    #[error("singular criterion denominator for pair ({i}, {j}) at r = {r}")]
    SingularDenominator { i: usize, j: usize, r: f64 },

    #[error("fiber variable r = {r} left the admissible interval")]
    FiberSingular { r: f64 },

    #[error("criterion violated at t = {t}: residual {residual:e} exceeds {tol:e}")]
    CriterionViolated { t: f64, residual: f64, tol: f64 },

    #[error("ambiguous angle clustering near {angle} (tolerance {tol:e})")]
    AmbiguousClustering { angle: f64, tol: f64 },

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("degenerate triangle ({i1}, {i2}, {i3})")]
    DegenerateTriangle { i1: usize, i2: usize, i3: usize },

    #[error("zero denominator cos(a_{i}-a_{j}) - cos(b_{i}-b_{j}) for pair ({i}, {j})")]
    ZeroDenominator { i: usize, j: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
