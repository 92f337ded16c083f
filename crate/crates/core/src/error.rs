use thiserror::Error;

/// Errors produced by the benchmarking engine.
#[derive(Debug, Error)]
pub enum QvError {
    #[error("invalid qubit count {0}: quantum volume circuits need at least 2 qubits")]
    TooFewQubits(usize),

    #[error("{what} supports at most {max} qubits, got {got}")]
    TooManyQubits { what: &'static str, max: usize, got: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("two-qubit decomposition deviates by {deviation:.3e} (limit {limit:.1e})")]
    DecompositionFailed { deviation: f64, limit: f64 },

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("probabilities must sum to 1, got {0}")]
    NotNormalized(f64),

    #[error("qubit count mismatch: expected {expected}, got {got}")]
    QubitMismatch { expected: usize, got: usize },

    #[error("invalid scale factor {0}: folding requires an odd positive integer")]
    InvalidScaleFactor(f64),

    #[error("duplicate scale factor {0}")]
    DuplicateScaleFactor(f64),

    #[error("length mismatch: {expected} coefficients but {got} values")]
    LengthMismatch { expected: usize, got: usize },

    #[error("total shots {total} is smaller than the number of scale factors {factors}")]
    InsufficientShots { total: u64, factors: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QvError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        QvError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than runtime faults.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            QvError::Io(_) | QvError::NumericalFault(_) | QvError::DecompositionFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, QvError>;
