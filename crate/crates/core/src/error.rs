use alloc::string::String;

/// Errors raised by grids, filters, likelihood recursions and the estimators built on them.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid parameter vector: {0}")]
    InvalidParams(String),

    #[error("inadmissible parameter: {0}")]
    Inadmissible(String),

    #[error("invalid observations: {0}")]
    InvalidObservations(String),

    #[error("filter collapse at step {step}: updated filter has zero mass")]
    FilterCollapse { step: usize },

    #[error("non-finite or negative density at grid point {index} (x = {x}) in step {step}")]
    NonFiniteDensity { step: usize, index: usize, x: f64 },

    #[error("path enumeration needs {paths:e} terms, above the 1e7 guard")]
    EnumerationTooLarge { paths: f64 },

    #[error(
        "parameter `{name}` (component {index}) is within finite-difference reach of its bound"
    )]
    BoundaryProximity { index: usize, name: String },

    #[error("singular information matrix (condition number {condition:e})")]
    SingularInformation { condition: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
