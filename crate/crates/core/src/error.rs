use thiserror::Error;

pub type Result<T, E = NldtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NldtError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid bounds for feature x{feature}: min {min} must be strictly below max {max}")]
    InvalidBounds { feature: usize, min: f64, max: f64 },

    #[error("invalid split rule: {0}")]
    InvalidRule(String),

    #[error("domain error: feature x{feature} is zero under a negative exponent")]
    Domain { feature: usize },

    #[error("coefficient vector has length {got}, tree expects {expected}")]
    CoefficientLength { expected: usize, got: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("empty node: impurity is undefined for zero points")]
    EmptyNode,

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("feature x{feature} is constant over the dataset")]
    ConstantFeature { feature: usize },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("environment: {0}")]
    Environment(String),

    #[error("step called on a finished episode")]
    StepAfterDone,

    #[error("invalid action {action} for {n_actions} actions")]
    InvalidAction { action: usize, n_actions: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("visitation profile does not match tree: {0}")]
    ProfileMismatch(String),

    #[error("unknown plot kind {0:?}")]
    UnknownPlotKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
