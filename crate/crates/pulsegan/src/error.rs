//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("signal of {len} samples is shorter than the {need}-sample smoothing window")]
    WindowTooLong { len: usize, need: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid band [{lo} Hz, {hi} Hz] for sample rate {rate} Hz")]
    InvalidBand { lo: f64, hi: f64, rate: f64 },

    #[error("degenerate chrominance: {0}")]
    DegenerateChrominance(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid layer configuration: {0}")]
    LayerConfig(String),

    #[error("peak detection found no peaks")]
    NoPeaks,

    #[error("too few intervals: need {need}, have {have}")]
    TooFewIntervals { need: usize, have: usize },

    #[error("invalid configuration for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("gradient check failed: max relative error {max_rel_err:.3e} at {worst}")]
    GradCheckFailed { max_rel_err: f64, worst: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
