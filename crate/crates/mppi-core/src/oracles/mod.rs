//! High-accuracy reference solvers and integrals: grid/quadrature reference
//! optima, a dynamic-programming closed-loop reference, exact weighted-mean
//! integrals, and log-log order fitting.

pub mod dp;
pub mod gibbs;
pub mod quadrature;
pub mod search;
pub mod slope;

pub use dp::{cls_ocp_oracle, DpParams};
pub use gibbs::{gibbs_mean, optimal_density_curve, GibbsParams};
pub use quadrature::{gauss_hermite, gauss_legendre, tensor_product, QuadratureRule};
pub use search::{
    det_ocp_oracle, expanding_scalar_min, golden_min, grid_refine_min, ols_ocp_oracle,
    OracleMeta, OracleSolution, SearchBox,
};
pub use slope::{slope_fit, SlopeFit};
