use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, Error)]
pub enum JsdmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: error estimate {estimate:.3e} exceeds tolerance {tol:.3e}")]
    Quadrature { estimate: f64, tol: f64 },

    #[error("matrix is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Residual history, most recent last (truncated to the last 32 entries).
        trace: Vec<f64>,
    },

    #[error("singular or ill-conditioned matrix: {0}")]
    Singular(String),

    #[error("dimension {requested} exceeds the configured cap {cap}")]
    DimensionOverflow { requested: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, JsdmError>;

impl JsdmError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        JsdmError::InvalidInput(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        JsdmError::Infeasible(msg.into())
    }

    /// True for errors that come from an iterative solver failing to settle.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, JsdmError::NonConvergence { .. } | JsdmError::Quadrature { .. })
    }
}
