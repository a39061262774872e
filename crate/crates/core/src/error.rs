use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("theta must exceed -1/2, got {0}")]
    ThetaOutOfRange(f64),
    #[error("alpha is fixed to 1/2, got {0}")]
    UnsupportedAlpha(f64),
    #[error("coordinate {index} is negative ({value})")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("coordinates sum to {sum}, which exceeds 1")]
    MassExceedsOne { sum: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid base weights: {0}")]
    InvalidBase(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies on the boundary of the simplex")]
    BoundaryPoint,
    #[error("stick-breaking residual did not fall below {threshold} within {cap} sticks")]
    NonConvergence { threshold: f64, cap: usize },
    #[error("argument {0} outside its domain")]
    DomainError(&'static str),
    #[error("time step {dt} exceeds the guard {max}")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("mesh has {nodes} nodes, above the cap {cap}")]
    MeshTooFine { nodes: usize, cap: usize },
    #[error("linear solve failed: relative residual {residual:e}")]
    SolverFailure { residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
