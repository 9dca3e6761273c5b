use thiserror::Error;

/// Errors produced by ingestion, metric computation, fitting and certification.
#[derive(Debug, Error)]
pub enum CalibError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("value out of [0,1] at line {line}")]
    OutOfRange { line: usize },

    #[error("missing column `{0}`")]
    MissingColumn(&'static str),

    #[error("empty input")]
    EmptyInput,

    #[error("sample {index} has no oracle mean")]
    MissingOracleMean { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("logistic fit did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("c = {c} is below the admissible floor sqrt(ln(1/delta)/(2*floor(n/2))) = {minimum}")]
    ThresholdTooSmall { c: f64, minimum: f64 },

    #[error("trainer failed: {0}")]
    Trainer(String),

    #[error("counterexample search failed: best certified margin {best_margin}")]
    SearchFailed { best_margin: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CalibError {
    /// `true` for problems with the caller's input (as opposed to numerical
    /// failures inside the library).
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            CalibError::NonConvergence { .. } | CalibError::SearchFailed { .. } | CalibError::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CalibError>;
