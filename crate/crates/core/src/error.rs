//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CsgeError>;

/// Everything that can go wrong while building, training, or querying an
/// ensemble.
#[derive(Debug, Error)]
pub enum CsgeError {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite value at row {row}, column {col} ({context})")]
    NonFiniteValue {
        row: usize,
        col: usize,
        context: &'static str,
    },

    #[error("negative error value {value} at index {index}")]
    NegativeError { index: usize, value: f64 },

    #[error("eta {value} outside [0, {max}]")]
    EtaOutOfRange { value: f64, max: f64 },

    #[error("invalid hyper-parameters: {0}")]
    InvalidHyperParams(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("estimator is not fitted")]
    NotFitted,

    #[error("fold {fold} has {got} samples but member `{member}` needs at least {needed}")]
    FoldTooSmall {
        fold: usize,
        member: String,
        needed: usize,
        got: usize,
    },

    #[error("lead time {t} outside horizon 0..{horizon}")]
    LeadTimeOutOfRange { t: usize, horizon: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing prediction for sample {sample}, member `{member}`, lead time {lead_time}")]
    MissingCell {
        sample: usize,
        member: String,
        lead_time: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CsgeError {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        CsgeError::ShapeMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
