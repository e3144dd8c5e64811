use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("overflow: |x| = {x} exceeds the representable range {limit} of the weight")]
    Overflow { x: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("MRS equation could not be bracketed for n = {n} below x = {limit}")]
    NoBracket { n: f64, limit: f64 },

    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("recurrence discretization did not stabilise (first unstable k = {k}, relative change {change:e})")]
    DiscretizationFailure { k: usize, change: f64 },

    #[error("degree {requested} exceeds table capacity {available}")]
    DegreeExceeded { requested: usize, available: usize },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("function is still growing at the domain edge |x| = {edge}; a weight factor is probably missing")]
    UnboundedDetected { edge: f64 },

    #[error("coefficient tail not converged: {0}")]
    TailNotConverged(String),

    #[error("Christoffel-Darboux cross-check failed: sum form {sum}, closed form {closed}")]
    KernelMismatch { sum: f64, closed: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
