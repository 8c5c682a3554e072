use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("window length must be at least 2, got {0}")]
    WindowTooShort(usize),
    #[error("unknown window kind `{0}`")]
    UnknownWindow(String),
    #[error("hop size {hop} must satisfy 0 < hop <= window length {window}")]
    InvalidHop { hop: usize, window: usize },
    #[error("window/hop pair violates constant overlap-add (relative deviation {deviation:e})")]
    ColaViolation { deviation: f64 },
    #[error("input signal is empty")]
    EmptySignal,
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("negative magnitude in {0}")]
    NegativeMagnitude(&'static str),
    #[error("frame needs at least 3 bins, got {0}")]
    TooFewBins(usize),
    #[error("bin {bin} out of range for {bins} bins")]
    BinOutOfRange { bin: usize, bins: usize },
    #[error("peak list is empty")]
    NoPeaks,
    #[error("no phase available for frame {frame} of source {source_index}")]
    MissingOnsetPhase { source_index: usize, frame: usize },
    #[error("onset frame {frame} outside [0, {frames})")]
    OnsetOutOfRange { frame: usize, frames: usize },
    #[error("at least one source is required")]
    NoSources,
    #[error("factorization rank must be at least 1")]
    InvalidRank,
    #[error("reference {0} has zero energy")]
    ZeroReference(usize),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
