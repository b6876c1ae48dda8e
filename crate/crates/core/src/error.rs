use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
///
/// Every message names the precondition that was violated.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quota must lie in the open interval (0, 1), received {0}")]
    InvalidQuota(f64),

    #[error("invalid outcome: {0}")]
    InvalidOutcome(String),

    #[error("invalid belief distribution: {0}")]
    InvalidBelief(String),

    #[error("coupling J must be finite and non-negative, received {0}")]
    InvalidCoupling(f64),

    #[error("population must be at least {min}, received {found}")]
    PopulationTooSmall { min: u64, found: u64 },

    #[error("exact enumeration is limited to N <= {cap}, received N = {found}")]
    EnumerationTooLarge { cap: u64, found: u64 },

    #[error("exact evaluation budget exceeded: N = {found} > {budget}")]
    BudgetExceeded { budget: u64, found: u64 },

    #[error("subcritical coupling: tanh(JC) = C has no positive solution for J = {0} <= 1")]
    Subcritical(f64),

    #[error("no asymptotic law is available at the critical coupling J = 1")]
    CriticalCoupling,

    #[error("common-belief regime is not classifiable: {0}")]
    Unclassifiable(String),

    #[error("invalid council: {0}")]
    InvalidCouncil(String),

    #[error("length mismatch for {what}: expected {expected}, got {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge after {nodes} nodes (last change {change:e})")]
    QuadratureNotConverged { nodes: usize, change: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
