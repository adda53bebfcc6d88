use thiserror::Error;

/// Errors raised across tableau construction, certification, and time stepping.
#[derive(Debug, Error)]
pub enum IerkError {
    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("method {method}: {message}")]
    BadParameters { method: String, message: String },

    #[error("method {method}: degenerate parameters ({message})")]
    DegenerateParameters { method: String, message: String },

    #[error("cannot parse coefficient `{0}`")]
    BadCoefficient(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error(
        "stage {stage} is not solvable: 1 + tau*a_ii*lambda vanishes for wavenumber index {mode}"
    )]
    NonInvertibleStage { stage: usize, mode: usize },

    #[error("non-finite value in step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IerkError {
    /// True for errors caused by the input rather than by a computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            IerkError::NonInvertibleStage { .. } | IerkError::NonFinite { .. } | IerkError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, IerkError>;
