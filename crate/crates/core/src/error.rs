use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model is a measure without pointwise values (white noise)")]
    NotAFunction,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("model has no spectral density")]
    NoDensity,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(
        "quadrature failed: value {value}, error estimate {error} above tolerance {tolerance}"
    )]
    QuadratureFailure {
        value: f64,
        error: f64,
        tolerance: f64,
    },
    #[error("unsatisfied condition: {0}")]
    UnsatisfiedCondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("correlation does not vanish: terminal value {terminal} above threshold {threshold} at lag {lag}")]
    NonVanishingCorrelation {
        terminal: f64,
        threshold: f64,
        lag: f64,
    },
    #[error("cholesky factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("size cap exceeded: {requested} > {cap}")]
    SizeCap { requested: usize, cap: usize },
    #[error("circulant embedding not positive semidefinite: {0}")]
    EmbeddingNotPsd(String),
    #[error("samples are not on identical points")]
    MismatchedPoints,
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("invalid variance {0} (must be positive)")]
    InvalidVariance(f64),
    #[error("precondition failed: {0}")]
    PreconditionFail(String),
    #[error("insufficient shells: {found} non-empty, need {needed}")]
    InsufficientShells { found: usize, needed: usize },
    #[error("range error: x = {x} < mu = {mu}")]
    RangeError { x: f64, mu: f64 },
    #[error("extrapolation beyond table at r = {r} (table ends at {max})")]
    Extrapolation { r: f64, max: f64 },
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code associated with the error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
