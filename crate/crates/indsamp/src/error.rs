use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A density pair whose weight function f/q is unbounded.
    #[error("unbounded weight: {0}")]
    UnboundedWeight(String),

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A log-density evaluated to NaN or +inf where a finite value is required.
    #[error("non-finite log density at x = {x}: {context}")]
    NonFiniteLogDensity { x: f64, context: String },

    /// Malformed input data, with the offending line number.
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Diagnostics on a constant trace are undefined.
    #[error("zero variance trace '{0}'")]
    ZeroVariance(String),

    /// Bad run configuration (CLI flags or config file).
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
