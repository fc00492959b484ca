use thiserror::Error;

/// Errors raised by the calibration library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch on {axis}: expected {expected}, found {found}")]
    DimensionMismatch {
        axis: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value {value} in {what} at ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unknown wavelet family '{name}'; supported: {supported}")]
    UnknownWavelet { name: String, supported: String },

    #[error("signal length {0} is not a power of two (wavelet path requires M = 2^J)")]
    NotPowerOfTwo(usize),

    #[error("coarsest level J0 = {j0} out of range for depth J = {depth}")]
    LevelOutOfRange { j0: usize, depth: usize },

    #[error("malformed decomposition: {0}")]
    MalformedDecomposition(String),

    #[error("matrix size {size} exceeds the limit of {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite intermediate in bayesian shrinkage at d = {d}, sigma = {sigma}, tau = {tau}, p = {p}")]
    NonFiniteShrinkage { d: f64, sigma: f64, tau: f64, p: f64 },

    #[error("signal too short for cross-validation: length {len}, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("singular system ({context}): condition estimate {condition:e}; {hint}")]
    Singular {
        context: &'static str,
        condition: f64,
        hint: &'static str,
    },

    #[error("rank-deficient component matrix: condition estimate {condition:e}")]
    RankDeficient { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
