use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tensor has non-positive determinant ({0:e})")]
    NonPositiveDeterminant(f64),

    #[error("tensor is singular")]
    SingularTensor,

    #[error("tensor is not symmetric positive definite")]
    NonPositiveDefinite,

    #[error("time step failed at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("time {t} outside of [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid loading program: {0}")]
    InvalidProgram(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("weighting matrix factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("non-finite residual encountered")]
    NonFiniteResidual,

    #[error("non-finite jacobian entry")]
    NonFiniteJacobian,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("operation not supported for this noise model: {0}")]
    UnsupportedModel(&'static str),

    #[error("normal matrix is singular (scaled condition estimate {0:e})")]
    SingularNormalMatrix(f64),

    #[error("reference parameter {index} is zero")]
    ZeroReferenceParameter { index: usize },

    #[error("not enough observations: {found} (need more than {required})")]
    InsufficientData { found: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
