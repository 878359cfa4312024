use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Variants split into two families: validation problems (bad inputs, bad
/// files, bad configuration) and numerical failures (non-finite values,
/// divergence). The CLI maps them to exit codes 1 and 2 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {shapes:?}")]
    Shape {
        op: &'static str,
        shapes: Vec<Vec<usize>>,
    },

    #[error("non-finite value produced by {context}")]
    NonFinite { context: String },

    #[error("training diverged at epoch {epoch}: {component} = {value}")]
    Divergence {
        epoch: usize,
        component: String,
        value: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("model container: {0}")]
    Format(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by arithmetic rather than by inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Divergence { .. })
    }

    /// Prefixes the message with `ctx` while keeping the error family.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Divergence { epoch, component, value } => Error::Divergence {
                epoch,
                component: format!("{ctx}: {component}"),
                value,
            },
            Error::NonFinite { context } => Error::NonFinite {
                context: format!("{ctx}: {context}"),
            },
            other => Error::invalid(format!("{ctx}: {other}")),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
