use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input is not Hermitian (relative asymmetry {0:.3e})")]
    NonHermitianInput(f64),

    #[error("matrix exponential overflowed the floating range")]
    Overflow,

    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("map annihilates the input state (trace of image {0:.3e})")]
    KernelHit(f64),

    #[error("operation unsupported for dimension {0}")]
    UnsupportedDim(usize),

    #[error("time order violated: need s < t, got s = {s}, t = {t}")]
    OrderViolation { s: f64, t: f64 },

    #[error("invalid environment model: {0}")]
    InvalidModel(String),

    #[error("invalid Lindbladian: {0}")]
    InvalidLindbladian(String),

    #[error("no contraction observed: {0}")]
    NonContracting(String),

    #[error("threshold not found up to {0}")]
    NotFoundUpTo(f64),

    #[error("support of size {0} exceeds the enumeration bound of 12")]
    TooLarge(usize),

    #[error("invalid Markov chain: {0}")]
    InvalidChain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
