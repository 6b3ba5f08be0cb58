use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension N = {0} is below the required N >= 5")]
    DimensionTooSmall(usize),

    #[error("insufficient resolution: {what} = {got}, need at least {min}")]
    InsufficientResolution {
        what: &'static str,
        got: usize,
        min: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field does not live on this domain (expected {expected} nodes, found {found})")]
    DomainMismatch { expected: usize, found: usize },

    #[error("field is identically zero (or numerically negligible)")]
    ZeroField,

    #[error("field must be strictly positive; node {node} has value {value}")]
    NonPositiveField { node: usize, value: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error(
        "classification inversion: alpha = {below_alpha} classified below the threshold \
         but alpha = {above_alpha} classified at/above; increase the margin or refine the grid"
    )]
    ClassificationInversion { below_alpha: f64, above_alpha: f64 },

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, LabError>;
