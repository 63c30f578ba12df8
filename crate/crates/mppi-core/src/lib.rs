//! Path-integral control solvers with high-accuracy reference oracles.
//!
//! The crate implements the standard single-shot MPPI update (softmin-weighted
//! noise averaging) and a deterministic variant that geometrically shrinks the
//! sampling covariance and temperature together, driving the iterates to the
//! noise-free optimal control. Alongside the solvers it ships independent
//! reference oracles (grid search for the deterministic problem, Gauss-Hermite
//! quadrature for the open-loop stochastic problem, backward dynamic
//! programming for the two-step closed-loop problem, and adaptive quadrature
//! for the exact softmin-smoothed control) so solver output can be checked
//! against certified values instead of against itself.
//!
//! Everything numeric is generic over the floating-point type through
//! [`Scalar`]; the `*64`/`*32` aliases below fix the common instantiations.

pub mod error;
pub mod linalg;
pub mod oracles;
pub mod problem;
pub mod sampling;
pub mod scenarios;
pub mod solver;

mod scalar;

pub use error::{CoreError, CoreResult};
pub use scalar::Scalar;

pub use problem::{
    check_noise_channel, default_probe_states, to_canonical, CanonicalForm, ControlWeight,
    CostModel, DynamicsModel, ModelKind, NoiseChannelReport, OcpInstance, RolloutScratch,
};
pub use sampling::{
    draw_batch, importance_correction, log_density, CovarianceSpec, SampleBatch,
};
pub use solver::{
    cls_mppi_u0, deterministic_mppi_solve, iteration_seed, softmin_weights, standard_mppi_step,
    value_of, IterateRecord, MppiConfig, SolveReport, StepOutcome, WeightVector,
};

/// Double-precision problem instance.
pub type OcpInstance64 = problem::OcpInstance<f64>;
/// Single-precision problem instance.
pub type OcpInstance32 = problem::OcpInstance<f32>;
/// Double-precision sampling covariance.
pub type CovarianceSpec64 = sampling::CovarianceSpec<f64>;
/// Single-precision sampling covariance.
pub type CovarianceSpec32 = sampling::CovarianceSpec<f32>;
/// Double-precision solver settings.
pub type MppiConfig64 = solver::MppiConfig<f64>;
/// Single-precision solver settings.
pub type MppiConfig32 = solver::MppiConfig<f32>;
/// Double-precision solve history.
pub type SolveReport64 = solver::SolveReport<f64>;
/// Single-precision solve history.
pub type SolveReport32 = solver::SolveReport<f32>;
/// Double-precision symmetric matrix.
pub type SymMat64 = linalg::SymMat<f64>;
/// Single-precision symmetric matrix.
pub type SymMat32 = linalg::SymMat<f32>;
/// Double-precision certified oracle solution.
pub type OracleSolution64 = oracles::OracleSolution<f64>;
/// Single-precision certified oracle solution.
pub type OracleSolution32 = oracles::OracleSolution<f32>;
