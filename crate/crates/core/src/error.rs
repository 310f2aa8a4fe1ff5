use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Rounding collapsed the strict interleaving of an auxiliary sequence
    /// (adjacent coordinates too close or too large in magnitude).
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("{what} size {actual} exceeds limit {limit}")]
    SizeGuard {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("labeling inconsistent with grid: {0}")]
    InconsistentLabeling(String),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
