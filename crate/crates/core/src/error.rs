use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error)]
pub enum PlaceError {
    #[error("invalid diagram point ({birth}, {death}): need death > birth >= 0")]
    InvalidPoint { birth: f64, death: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({birth}, {death}) lies outside the region 0 <= b < d <= {bound}")]
    OutsideRegion { birth: f64, death: f64, bound: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("need at least {needed} classes, got {got}")]
    TooFewClasses { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numeric guard tripped: {0}")]
    Numeric(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, PlaceError>;

impl PlaceError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        PlaceError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl AsRef<std::path::Path>,
        line: usize,
        msg: impl Into<String>,
    ) -> Self {
        PlaceError::Parse {
            path: path.as_ref().display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}
