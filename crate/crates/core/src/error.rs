use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("probability vector needs at least 2 entries, got {0}")]
    TooFewClasses(usize),

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("labels are required")]
    MissingLabels,

    #[error("mining selects {k} of {available} negatives")]
    MiningOutOfRange { k: usize, available: usize },

    #[error("row {row} has zero norm")]
    ZeroNorm { row: usize },

    #[error("link function is singular at {0}")]
    SingularLink(f64),

    #[error("objective is not finite at {0}")]
    NonFiniteObjective(f64),

    #[error("precision-recall curve needs at least one positive")]
    NoPositives,

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("training diverged in epoch {epoch}")]
    Diverged { epoch: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
