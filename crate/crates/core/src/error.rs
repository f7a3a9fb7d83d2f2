use thiserror::Error;

use crate::rd::RDPoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution ({what}): {reason}")]
    InvalidDistribution { what: String, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A conditional row with no defined distribution was read under positive mass.
    #[error("undefined conditional row {row} reached with positive mass")]
    UndefinedRow { row: usize },

    #[error("Blahut-Arimoto did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: RDPoint,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("grid too large: {points} evaluations exceed the limit of {limit}; coarsen the resolution")]
    GuardExceeded { points: u128, limit: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("curve has no points")]
    EmptyCurve,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(what: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidDistribution {
        what: what.into(),
        reason: reason.into(),
    }
}
