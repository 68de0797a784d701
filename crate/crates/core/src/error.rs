use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("undefined flatness of zero signal")]
    ZeroSignal,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("dense oracle limited to n <= {cap}, got n = {n}")]
    OracleCapExceeded { n: usize, cap: usize },

    #[error("divergence: non-finite iterate (step size too large?)")]
    Divergence,

    #[error("dictionary is numerically singular")]
    SingularDictionary,

    #[error("degenerate iterate: cannot normalize a zero vector")]
    DegenerateIterate,

    #[error("denominator nonpositive: delta = {0} outside [0, 1/sqrt(3))")]
    DenominatorNonpositive(f64),

    #[error("exact projection onto the intersection is not available")]
    ExactProjectionUnavailable,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
