use thiserror::Error;

/// Errors produced by instance construction, the rounding schemes and the
/// gap calculators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for a ground set of size {len}")]
    InvalidIndex { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported projective plane order {0}: only 1 and primes are supported")]
    UnsupportedOrder(u64),

    #[error("instance too large for exact enumeration: {size} exceeds the cap of {limit}")]
    ScaleCap { size: usize, limit: usize },

    #[error("correlation gap undefined: zero fractional value and infeasible support")]
    UndefinedPoint,

    #[error("no dominating convex decomposition: best coverage factor {0:.12}")]
    NoCertificate(f64),

    #[error("integrality-gap ratio is infinite: the integral optimum on the support is zero")]
    InfiniteRatio,

    #[error("scheme `{scheme}` is not applicable to a {instance} instance")]
    Incompatible { scheme: String, instance: String },

    #[error("feasibility violation by `{scheme}` at trial {trial} (seed {seed}): {detail}")]
    FeasibilityViolation {
        scheme: String,
        seed: u64,
        trial: u64,
        detail: String,
    },

    #[error("I/O error at {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed instance file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
