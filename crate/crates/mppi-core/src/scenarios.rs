//! Built-in benchmark scenarios keyed by name.
//!
//! All four instances are scalar (n_x = n_u = n_w = 1) with identity control
//! weight, zero stage cost, and unit base covariance, so the restricted
//! overall-cost structure J(U, W) = S(U+W) + ½‖U‖² holds exactly:
//!
//! * `quartic`: one step, x⁺ = x + u + w from x̄₀ = 0; the terminal cost is
//!   chosen so the deterministic objective is 20U⁴ + 24U³ + 8U² with a unique
//!   global minimum at 0, a stationary point at −½ (value ¼), and a local
//!   maximum at −0.4 (value 0.256).
//! * `affine2`: two steps of the input-affine map x⁺ = x − ½sin(3x) + u + w
//!   from x̄₀ = −1, terminal cost (x−1)⁶ + x.
//! * `arctan2`: two steps of the saturating map x⁺ = x + arctan(u + w) from
//!   x̄₀ = −1, same terminal cost; not input-affine.
//! * `lq1`: two steps of x⁺ = x + u + w from x̄₀ = 1, terminal cost ½x²;
//!   linear-quadratic, so certainty equivalence holds exactly.

use std::sync::Arc;

use crate::error::{CoreError, CoreResult};
use crate::linalg::SymMat;
use crate::oracles::SearchBox;
use crate::problem::{ControlWeight, CostModel, DynamicsModel, OcpInstance};
use crate::sampling::CovarianceSpec;
use crate::scalar::Scalar;
use crate::solver::MppiConfig;

/// Registered scenario names, in registry order.
pub const SCENARIO_NAMES: [&str; 4] = ["quartic", "affine2", "arctan2", "lq1"];

/// Registered scenario names.
pub fn names() -> &'static [&'static str] {
    &SCENARIO_NAMES
}

fn unknown(name: &str) -> CoreError {
    CoreError::UnknownScenario {
        name: name.to_string(),
        registered: SCENARIO_NAMES.join(", "),
    }
}

/// Default oracle search parameters for one scenario.
///
/// The search box covers the full control trajectory (dimension N·n_u); the
/// stochastic box is wider than the deterministic minimizer needs because
/// expected-cost minimizers drift outward under the asymmetric sextic cost.
#[derive(Debug, Clone)]
pub struct OracleDefaults<T> {
    pub search_box: SearchBox<T>,
    /// Grid points per axis for the deterministic oracle.
    pub det_points: usize,
    /// Stencil refinement rounds after the initial scan.
    pub det_rounds: usize,
    /// Grid points per axis for the open-loop stochastic oracle.
    pub ols_points: usize,
    /// Gauss-Hermite order per noise dimension for the open-loop oracle.
    pub ols_quadrature: usize,
    /// Gauss-Hermite order for the closed-loop backward/forward passes.
    pub cls_quadrature: usize,
}

fn zero_state_cost<T: Scalar>() -> Arc<dyn Fn(&[T]) -> T + Send + Sync> {
    Arc::new(|_x: &[T]| T::zero())
}

fn identity_map<T: Scalar>() -> Arc<dyn Fn(&[T], &mut [T]) + Send + Sync> {
    Arc::new(|x: &[T], out: &mut [T]| out.copy_from_slice(x))
}

fn ones_map<T: Scalar>() -> Arc<dyn Fn(&[T], &mut [T]) + Send + Sync> {
    Arc::new(|_x: &[T], out: &mut [T]| out.fill(T::one()))
}

fn scalar_cost<T: Scalar>(f: impl Fn(T) -> T + Send + Sync + 'static) -> Arc<dyn Fn(&[T]) -> T + Send + Sync> {
    Arc::new(move |x: &[T]| f(x[0]))
}

fn sextic_plus_linear<T: Scalar>() -> Arc<dyn Fn(&[T]) -> T + Send + Sync> {
    scalar_cost(|x: T| {
        let d = x - T::one();
        d.powi(6) + x
    })
}

fn scalar_instance<T: Scalar>(
    dynamics: DynamicsModel<T>,
    terminal: Arc<dyn Fn(&[T]) -> T + Send + Sync>,
    horizon: usize,
    x0: T,
    lambda0: T,
    sigma0: T,
) -> CoreResult<OcpInstance<T>> {
    let cost = CostModel::new(
        zero_state_cost(),
        ControlWeight::Constant(SymMat::identity(1)),
        terminal,
    );
    // With R = I the temperature/covariance coupling λR⁻¹ = Σ̄ fixes λ = σ₀.
    OcpInstance::new(
        dynamics,
        cost,
        horizon,
        vec![x0],
        CovarianceSpec::new(SymMat::identity(1), horizon, sigma0)?,
        lambda0 * sigma0,
    )
}

/// One-step quartic scenario with a configurable cubic objective coefficient.
///
/// The deterministic objective is J(U) = (c₄/24)U⁴ + (c₃/6)U³ + (c₂/2)U²
/// with c₂ = 16, c₄ = 480 fixed; the registry uses c₃ = 144. The terminal
/// cost absorbs J minus the ½U² control penalty, which requires c₂ ≥ 1.
/// Exposed separately so negative tests can tamper with the landscape.
pub fn quartic_instance_with_cubic<T: Scalar>(
    c3: T,
    lambda0: T,
    sigma0: T,
) -> CoreResult<OcpInstance<T>> {
    let e4 = T::c(480.0 / 24.0);
    let e3 = c3 / T::c(6.0);
    let e2 = T::c(16.0 / 2.0 - 0.5);
    let terminal = scalar_cost(move |x: T| ((e4 * x + e3) * x + e2) * x * x);
    let dynamics = DynamicsModel::input_affine(1, 1, 1, identity_map(), ones_map(), ones_map());
    scalar_instance(dynamics, terminal, 1, T::zero(), lambda0, sigma0)
}

/// Builds a registered scenario instance with the given temperature and base
/// covariance scale (both 1 in the registry defaults).
pub fn build_instance<T: Scalar>(name: &str, lambda0: T, sigma0: T) -> CoreResult<OcpInstance<T>> {
    match name {
        "quartic" => quartic_instance_with_cubic(T::c(144.0), lambda0, sigma0),
        "affine2" => {
            let f_tilde: Arc<dyn Fn(&[T], &mut [T]) + Send + Sync> =
                Arc::new(|x: &[T], out: &mut [T]| {
                    out[0] = x[0] - T::c(0.5) * (T::c(3.0) * x[0]).sin();
                });
            let dynamics = DynamicsModel::input_affine(1, 1, 1, f_tilde, ones_map(), ones_map());
            scalar_instance(dynamics, sextic_plus_linear(), 2, -T::one(), lambda0, sigma0)
        }
        "arctan2" => {
            let step: Arc<dyn Fn(&[T], &[T], &[T], &mut [T]) + Send + Sync> =
                Arc::new(|x: &[T], u: &[T], w: &[T], out: &mut [T]| {
                    out[0] = x[0] + (u[0] + w[0]).atan();
                });
            let dynamics = DynamicsModel::general(1, 1, 1, step);
            scalar_instance(dynamics, sextic_plus_linear(), 2, -T::one(), lambda0, sigma0)
        }
        "lq1" => {
            let dynamics =
                DynamicsModel::input_affine(1, 1, 1, identity_map(), ones_map(), ones_map());
            let terminal = scalar_cost(|x: T| T::c(0.5) * x * x);
            scalar_instance(dynamics, terminal, 2, T::one(), lambda0, sigma0)
        }
        other => Err(unknown(other)),
    }
}

/// Default solver settings shared by all scenarios: 10⁵ samples, 10 rounds of
/// shrinking by √2/2 from β = 1, unit temperature, zero initial control.
pub fn default_config<T: Scalar>(name: &str) -> CoreResult<MppiConfig<T>> {
    let horizon = match name {
        "quartic" => 1,
        "affine2" | "arctan2" | "lq1" => 2,
        other => return Err(unknown(other)),
    };
    Ok(MppiConfig {
        samples: 100_000,
        iterations: 10,
        shrink_factor: T::c(std::f64::consts::FRAC_1_SQRT_2),
        lambda0: T::one(),
        init_control: vec![T::zero(); horizon],
        seed: 42,
    })
}

/// Default oracle search parameters per scenario.
///
/// Gauss-Hermite resolves integrand frequency content up to roughly
/// √(2·order) in standardized noise units. The polynomial scenarios are
/// integrated exactly at low order, while the sin and arctan compositions at
/// unit noise need order ≈ 200 (open-loop, the sextic amplifies the sin
/// harmonics) and ≈ 160 (closed-loop forward pass) before the minimizers
/// settle; the closed-loop backward pass of `affine2` stays cheap because
/// its noise enters after the nonlinearity.
pub fn oracle_defaults<T: Scalar>(name: &str) -> CoreResult<OracleDefaults<T>> {
    let (dim, half_width, ols_quadrature, cls_quadrature) = match name {
        "quartic" => (1, 2.0, 40, 40),
        "lq1" => (2, 2.0, 40, 40),
        "affine2" => (2, 4.0, 200, 40),
        "arctan2" => (2, 4.0, 200, 160),
        other => return Err(unknown(other)),
    };
    Ok(OracleDefaults {
        search_box: SearchBox::cube(dim, T::c(-half_width), T::c(half_width)),
        det_points: 401,
        det_rounds: 40,
        ols_points: 41,
        ols_quadrature,
        cls_quadrature,
    })
}
