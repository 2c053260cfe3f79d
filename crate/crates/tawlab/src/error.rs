use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes: config
/// problems exit 2, numeric failures exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({0}, {1}) is outside the sampled support")]
    OutOfDomain(f64, f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical instability at step {step}: {what}")]
    Instability { step: usize, what: String },

    #[error("accuracy failure: {0}")]
    Accuracy(String),

    #[error("ellipticity failure: {0}")]
    Ellipticity(String),

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("array file error: {0}")]
    ArrayFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) | Error::ArrayFile(_) => 2,
            _ => 3,
        }
    }
}
