use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Scientific verdicts (a certificate failing, a basis that cannot be
/// dissected) are reported through result values, not through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid Hilbert structure: {0}")]
    InvalidStructure(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid state family: {0}")]
    InvalidFamily(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root bracketing failed: deviation stayed at {value} below target {target} up to b = {b}")]
    BracketFailure { b: f64, value: f64, target: f64 },

    #[error("bisection did not reach tolerance within {iterations} iterations (residual {residual:e})")]
    BisectionStalled { iterations: usize, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
