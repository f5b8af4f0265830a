use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit classes used by the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Usage = 1,
    BadInput = 2,
    Numerical = 3,
    PartialFailure = 4,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("heat source mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("wall assembly kind mismatch: expected {expected}, got {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("time step {dt} s exceeds the stability limit {limit:.6} s set by the {layer} layer")]
    Stability {
        dt: f64,
        limit: f64,
        layer: &'static str,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed series: {0}")]
    MalformedSeries(String),

    #[error("series never crosses the 63.2% level {level}")]
    NoCrossing { level: f64 },

    #[error("no window of {window} s with range below {threshold}")]
    NoPlateau { threshold: f64, window: f64 },

    #[error("degenerate normalization: plateau equals initial value {0}")]
    DegenerateNormalization(f64),

    #[error("value {value} at index {index} is not above ambient {ambient}")]
    LogDomain {
        index: usize,
        value: f64,
        ambient: f64,
    },

    #[error("degenerate baseline {0}: must be strictly positive")]
    DegenerateBaseline(f64),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_class(&self) -> ExitClass {
        match self {
            Error::Stability { .. } | Error::Numerical(_) => ExitClass::Numerical,
            _ => ExitClass::BadInput,
        }
    }
}
