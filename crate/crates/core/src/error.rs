//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by fitting, test-statistic construction and simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument left the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A design or information matrix is (numerically) rank deficient.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Iteration limit reached before the convergence criteria were met.
    /// Carries the last iterate for diagnosis.
    #[error("no convergence after {iterations} iterations (deviance {last_deviance:e})")]
    NonConvergence {
        iterations: usize,
        last_beta: Vec<f64>,
        last_deviance: f64,
    },

    /// The precision parameter cannot be estimated (zero deviance) or a
    /// correction factor is degenerate (`d_(2) = 0`).
    #[error("degenerate precision: {0}")]
    DegeneratePrecision(String),

    /// The requested quantity does not exist in this configuration.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A simulation scenario is internally inconsistent.
    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    /// Too many Monte Carlo replications failed for the run to be trusted.
    #[error("{failed} of {total} replications failed (limit {limit_percent}%)")]
    TooManyFailures {
        failed: usize,
        total: usize,
        limit_percent: f64,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
