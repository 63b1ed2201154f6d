//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("delay window at index {index} needs samples {first_needed}..={index} (d={delays}, series length {len})")]
    WindowOutOfRange {
        index: usize,
        delays: usize,
        first_needed: isize,
        len: usize,
    },

    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("sample interval mismatch: expected {expected}, got {got}")]
    DtMismatch { expected: f64, got: f64 },

    #[error("degenerate metrics range: warmup {warmup_s} s must be strictly below horizon {horizon_s} s")]
    DegenerateMetricsRange { warmup_s: f64, horizon_s: f64 },

    #[error("plant state diverged (non-finite) at t = {time_s} s")]
    Divergence { time_s: f64 },

    #[error("training diverged in stage {stage} at epoch {epoch}")]
    TrainingDiverged { stage: &'static str, epoch: usize },

    #[error("optimizer failed: {0}")]
    Solver(String),

    #[error("malformed file{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Malformed { line: Option<usize>, msg: String },

    #[error("checkpoint format version mismatch: found {found:?}")]
    VersionMismatch { found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn malformed(line: usize, msg: impl Into<String>) -> Self {
        Error::Malformed {
            line: Some(line),
            msg: msg.into(),
        }
    }

    pub fn malformed_at(msg: impl Into<String>) -> Self {
        Error::Malformed {
            line: None,
            msg: msg.into(),
        }
    }

    /// Shift the timestamp of a divergence error into absolute run time.
    pub fn offset_time(self, t0: f64) -> Self {
        match self {
            Error::Divergence { time_s } => Error::Divergence { time_s: t0 + time_s },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
