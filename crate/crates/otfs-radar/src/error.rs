use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("target delay {delay_s} s exceeds the cyclic prefix {cp_s} s")]
    DelayExceedsCp { delay_s: f64, cp_s: f64 },

    #[error("time {t} s outside the frame interval [{min} s, {max} s]")]
    TimeOutOfRange { t: f64, min: f64, max: f64 },

    #[error("transmit signal has zero energy; the detection statistic is undefined")]
    ZeroSignal,

    #[error("search grid exceeds the model periodicity: {0}")]
    GridBounds(String),

    #[error("CFAR training band is empty")]
    EmptyTrainingBand,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
