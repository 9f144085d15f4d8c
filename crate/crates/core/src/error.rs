use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sequence too short: {frames} frames, need at least {required}")]
    TooShort { frames: usize, required: usize },

    #[error("unknown joint `{0}`")]
    UnknownJoint(String),

    #[error("malformed skeleton: {0}")]
    Skeleton(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("bad container: {0}")]
    Format(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error("i/o error on {path}: {source}")]
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

    /// True for numeric divergence (non-finite losses, gradients or parameters).
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
