use thiserror::Error;

/// Errors produced by the transforms, estimators and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("window parameter sigma={sigma} is below the admissible bound alpha/mu={bound}")]
    SigmaBelowBound { sigma: f64, bound: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("plane mismatch: {0}")]
    GridMismatch(String),

    #[error("need at least 3 scales to differentiate along the scale axis, got {0}")]
    TooFewScales(usize),

    #[error("component zone undefined at sigma={sigma}: chirp rate {rate} Hz/s too fast for IF {freq} Hz")]
    ZoneUndefined { sigma: f64, freq: f64, rate: f64 },

    #[error("components {lower} and {upper} are not separable at t={time}")]
    Unseparable { lower: usize, upper: usize, time: f64 },

    #[error("entropy window around column {0} holds no energy")]
    EmptyWindow(usize),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sample rate missing: add a `# sample_rate=<Hz>` header or pass one explicitly")]
    MissingSampleRate,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
