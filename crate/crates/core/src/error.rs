//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Incompatible tensor/layer dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid configuration value or combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an API contract (e.g. a discriminator bidding on
    /// its own pair's lot).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Non-finite value produced where one is forbidden.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Numeric failure with training-loop context attached.
    #[error("numeric failure at epoch {epoch}, gan {gan}, minibatch {minibatch}: {source}")]
    Training {
        epoch: usize,
        gan: usize,
        minibatch: usize,
        #[source]
        source: Box<Error>,
    },

    /// A metric that has no defined value on this input.
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A run artifact (checkpoint, config, metrics file) that exists but
    /// cannot be used.
    #[error("invalid artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn artifact(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Artifact {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 1 usage/config, 2 numeric, 3 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape(_) | Error::Config(_) | Error::Contract(_) => 1,
            Error::Numeric(_) | Error::Training { .. } | Error::UndefinedMetric(_) => 2,
            Error::Io { .. } | Error::Artifact { .. } => 3,
        }
    }
}
