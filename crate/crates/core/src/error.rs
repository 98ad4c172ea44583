use thiserror::Error;

/// Errors raised by the algebra, channel, divergence and solver routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("algebra dimension must be at least 1")]
    ZeroDimension,

    #[error("function undefined at eigenvalue {eigenvalue}")]
    Domain { eigenvalue: f64 },

    #[error("element is singular: eigenvalue {eigenvalue} is not above the positivity threshold")]
    Singular { eigenvalue: f64 },

    #[error("element is not positive: eigenvalue {eigenvalue}")]
    NotPositive { eigenvalue: f64 },

    #[error("not a state: {reason}")]
    NotAState { reason: String },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension {d} exceeds the oracle limit {d_max}")]
    Resource { d: usize, d_max: usize },

    #[error("matrix of size {got} does not match algebra dimension {d} (expected {expected})")]
    MatrixShape { d: usize, expected: usize, got: usize },

    #[error("map is not idempotent (residual {residual:e})")]
    NotIdempotent { residual: f64 },

    #[error("did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("quadrature failed: estimate {estimate}, error bound {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}
