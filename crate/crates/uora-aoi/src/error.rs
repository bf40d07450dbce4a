use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum UoraError {
    /// A scenario or simulation configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation was called with out-of-range arguments.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric self-check failed (cancellation, non-stochastic row, ...).
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    /// The coupled (q, rho) fixed point did not converge.
    #[error(
        "fixed point did not converge after {iterations} iterations \
         (residual {residual:.3e}, last q = {q:.8}, rho = {rho:.8})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        q: f64,
        rho: f64,
    },

    /// The stationary distribution is degenerate for the requested quantity.
    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("scenario file parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, UoraError>;
