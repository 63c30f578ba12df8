//! Error type shared by solvers and oracles.

use thiserror::Error;

/// Failure modes surfaced by the numeric routines.
///
/// Solvers and oracles never panic on bad numerics; every detectable failure
/// is reported through this enum so callers can distinguish caller mistakes
/// (dimension or contract violations) from numeric breakdowns.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// Input slice lengths disagree with the declared problem dimensions.
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A rollout or cost evaluation produced a non-finite value; `step` is
    /// the trajectory index at which it appeared.
    #[error("non-finite {what} at step {step}")]
    NumericOverflow { what: &'static str, step: usize },

    /// Covariance input is not symmetric positive definite, or the scale
    /// factor is not strictly positive.
    #[error("covariance invalid: {0}")]
    CovarianceInvalid(&'static str),

    /// Every sampled trajectory cost was non-finite; no weights can be formed.
    #[error("no sample produced a finite cost")]
    NoValidSamples,

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    ContractViolation(&'static str),

    /// The requested operation needs structure the model does not declare
    /// (for example input-affine dynamics).
    #[error("unsupported model: {0}")]
    UnsupportedModel(&'static str),

    /// A declared model transformation failed a consistency check.
    #[error("transformation invalid: {0}")]
    TransformationInvalid(&'static str),

    /// The minimizer landed on the search-box boundary; the reported optimum
    /// would be untrustworthy. The message names the box to enlarge.
    #[error("minimizer hit the search boundary: {0}")]
    BoundaryHit(String),

    /// A tabulated function was queried outside, or carries significant mass
    /// outside, its grid extent. The message reports the required extent.
    #[error("grid extent insufficient: {0}")]
    GridExtent(String),

    /// Adaptive quadrature failed to reach the requested tolerance within its
    /// refinement budget.
    #[error("integration budget exhausted: {0}")]
    IntegrationBudget(String),

    /// Fewer usable data points than the operation requires.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Requested scenario name is not registered; the message lists the
    /// registered names.
    #[error("unknown scenario '{name}'; registered: {registered}")]
    UnknownScenario { name: String, registered: String },
}

/// Convenience alias used across the crate.
pub type CoreResult<T> = Result<T, CoreError>;
