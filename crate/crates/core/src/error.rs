use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (empty input, length mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Numerical fault: non-finite parameters, outputs or losses.
    #[error("numerical fault: {0}")]
    Fault(String),

    #[error("non-finite loss at sample {index}")]
    NonFiniteLoss { index: usize },

    #[error("calibration failed: best achieved beta {best_beta:.4} (target {target:.4} +/- {tolerance})")]
    CalibrationFailed {
        best_beta: f64,
        target: f64,
        tolerance: f64,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("environment fault: {0}")]
    Environment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
