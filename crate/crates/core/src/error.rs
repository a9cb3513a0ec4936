use thiserror::Error;

use crate::geometry::Point;

/// Errors produced by the geometry, field, integrator and analysis layers.
#[derive(Debug, Clone, Error)]
pub enum GeoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no unique minimizing geodesic between antipodal points")]
    NoUniqueGeodesic,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("point outside chart domain: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("reference flow could not reach tolerance {tolerance:e} (last difference {difference:e})")]
    AccuracyNotAttained { tolerance: f64, difference: f64 },
    #[error("step {step} failed: {reason}")]
    StepFailed {
        step: usize,
        partial: Vec<Point>,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, GeoError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GeoError {
    GeoError::InvalidInput(msg.into())
}
