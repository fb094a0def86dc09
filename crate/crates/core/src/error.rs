use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coincident consecutive points at ({x}, {y})")]
    DegenerateStep { x: f64, y: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no trips survived preprocessing")]
    NoTrips,

    #[error("cannot place site layout: {0}")]
    Infeasible(String),

    #[error("no route between nodes {from} and {to}")]
    Disconnected { from: usize, to: usize },

    #[error("road graph invariant violated: {0}")]
    GraphInvariant(String),

    #[error("coordinate frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by user-supplied configuration rather than data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
