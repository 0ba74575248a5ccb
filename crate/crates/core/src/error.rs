use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("vector length {0} is below the minimum dimension 2")]
    DimensionTooSmall(usize),
    #[error("order k = {k} out of range for n = {n}")]
    OrderOutOfRange { k: i64, n: usize },
    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate index {0} in deleted index set")]
    DuplicateIndex(usize),
    #[error("entry {index} = {value} violates positivity")]
    NotPositive { index: usize, value: f64 },
    #[error("entry {index} = {value} is not finite")]
    NotFinite { index: usize, value: f64 },
    #[error("sigma_{k}(a) = {sigma} is not normalized to 1")]
    NotNormalized { k: usize, sigma: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix not symmetric at ({i},{j}): |difference| = {diff}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("eigenvalue iteration did not converge within {0} sweeps")]
    EigenNoConvergence(usize),
    #[error("argument `{name}` = {value} must be strictly positive")]
    NonPositiveArgument { name: &'static str, value: f64 },
    #[error("argument `{name}` = {value} must be non-negative")]
    NegativeArgument { name: &'static str, value: f64 },
    #[error("target {target} is not above mu(0) = {mu0}; no admissible alpha exists")]
    TargetBelowRange { target: f64, mu0: f64 },
    #[error("invalid sample grid: {0}")]
    InvalidGrid(String),
    #[error("boundary separation not reached at xi = {xi:?} after t = {t_max:e}; domain is not strictly convex there within tolerance")]
    ConvexityViolation { xi: Vec<f64>, t_max: f64 },
    #[error("domain closure not contained in E(sbar): max boundary level {max_s} >= sbar = {sbar}")]
    DomainNotContained { max_s: f64, sbar: f64 },
    #[error("sandwich contract `{what}` violated at {point:?} (gap = {gap:e})")]
    ContractViolation {
        what: String,
        point: Vec<f64>,
        gap: f64,
    },
    #[error("linear solve failed: {detail} ({off_cone_nodes} interior nodes outside the admissibility cone)")]
    LinearSolveFailed {
        detail: String,
        off_cone_nodes: usize,
    },
    #[error("{0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
