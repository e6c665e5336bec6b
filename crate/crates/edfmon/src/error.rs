use thiserror::Error;

/// Errors shared across the monitoring pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric within tolerance at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {coord} of the indicator series is constant")]
    DegenerateSeries { coord: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("point selection produced duplicate points")]
    DuplicatePoints,

    #[error("no grid points retained; dependence too strong or learning sample too small")]
    NoPointsRetained,

    #[error("Kendall's tau {tau} outside the valid range for {family}")]
    TauOutOfRange { tau: f64, family: &'static str },

    #[error("change point at offset {at} lies beyond the horizon {horizon}")]
    ChangeBeyondHorizon { at: usize, horizon: usize },

    #[error("singular Jacobian in the nonlinear least-squares fit")]
    SingularJacobian,

    #[error("alpha {alpha} not present in the quantile table")]
    AlphaNotInTable { alpha: f64 },

    #[error("number of points {p} outside the validated interpolation range [2, 50]")]
    POutOfRange { p: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
