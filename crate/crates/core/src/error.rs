use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("{}: frame is {found_width}x{found_height}, expected {width}x{height}", path.display())]
    DimensionMismatch {
        path: PathBuf,
        width: usize,
        height: usize,
        found_width: usize,
        found_height: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid cascade: {0}")]
    Cascade(String),

    #[error("signal too short: {0}")]
    SignalTooShort(String),

    #[error("no frequency bin falls inside {low_hz}-{high_hz} Hz")]
    EmptyBand { low_hz: f64, high_hz: f64 },

    #[error("no peaks found in ECG signal")]
    NoPeaks,

    #[error("no face found in any of {0} frames")]
    NoFaceFound(usize),

    #[error("{0} requires a non-empty input")]
    Empty(&'static str),

    #[error("trial segmentation: {0}")]
    Segmentation(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
