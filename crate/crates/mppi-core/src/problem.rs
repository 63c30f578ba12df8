//! Discrete-time optimal control problem definition: dynamics, costs,
//! rollouts, and the input-affine canonical transformation.

use std::sync::Arc;

use crate::error::{CoreError, CoreResult};
use crate::linalg::SymMat;
use crate::sampling::CovarianceSpec;
use crate::scalar::Scalar;

type StepFn<T> = Arc<dyn Fn(&[T], &[T], &[T], &mut [T]) + Send + Sync>;
type StateMap<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;
type StateCostFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Structure declared by a dynamics model beyond the raw step function.
#[derive(Clone)]
pub enum ModelKind<T> {
    General,
    /// x⁺ = f̃(x) + B(x) u + G(x) w, with B written row-major n_x×n_u and G
    /// row-major n_x×n_w.
    InputAffine {
        f_tilde: StateMap<T>,
        b: StateMap<T>,
        g: StateMap<T>,
    },
}

/// Deterministic discrete-time transition map x⁺ = f(x, u, w).
#[derive(Clone)]
pub struct DynamicsModel<T> {
    pub n_x: usize,
    pub n_u: usize,
    pub n_w: usize,
    step: StepFn<T>,
    kind: ModelKind<T>,
}

impl<T: Scalar> DynamicsModel<T> {
    pub fn general(n_x: usize, n_u: usize, n_w: usize, step: StepFn<T>) -> Self {
        Self {
            n_x,
            n_u,
            n_w,
            step,
            kind: ModelKind::General,
        }
    }

    /// Builds an input-affine model; the step function is assembled from the
    /// declared pieces so the affine identity holds by construction.
    pub fn input_affine(
        n_x: usize,
        n_u: usize,
        n_w: usize,
        f_tilde: StateMap<T>,
        b: StateMap<T>,
        g: StateMap<T>,
    ) -> Self {
        let (ft, bm, gm) = (f_tilde.clone(), b.clone(), g.clone());
        let step: StepFn<T> = Arc::new(move |x, u, w, out| {
            let mut b_mat = vec![T::zero(); n_x * n_u];
            let mut g_mat = vec![T::zero(); n_x * n_w];
            ft(x, out);
            bm(x, &mut b_mat);
            gm(x, &mut g_mat);
            for i in 0..n_x {
                for j in 0..n_u {
                    out[i] += b_mat[i * n_u + j] * u[j];
                }
                for j in 0..n_w {
                    out[i] += g_mat[i * n_w + j] * w[j];
                }
            }
        });
        Self {
            n_x,
            n_u,
            n_w,
            step,
            kind: ModelKind::InputAffine { f_tilde, b, g },
        }
    }

    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn step(&self, x: &[T], u: &[T], w: &[T], out: &mut [T]) {
        (self.step)(x, u, w, out)
    }
}

/// Control penalty: constant or evaluated at the current state.
#[derive(Clone)]
pub enum ControlWeight<T> {
    Constant(SymMat<T>),
    StateDependent(Arc<dyn Fn(&[T]) -> SymMat<T> + Send + Sync>),
}

/// Stage cost c(x) + ½ uᵀR(x)u plus terminal cost E(x).
#[derive(Clone)]
pub struct CostModel<T> {
    state_cost: StateCostFn<T>,
    terminal_cost: StateCostFn<T>,
    control_weight: ControlWeight<T>,
}

impl<T: Scalar> CostModel<T> {
    pub fn new(
        state_cost: StateCostFn<T>,
        control_weight: ControlWeight<T>,
        terminal_cost: StateCostFn<T>,
    ) -> Self {
        Self {
            state_cost,
            terminal_cost,
            control_weight,
        }
    }

    pub fn state_cost(&self, x: &[T]) -> T {
        (self.state_cost)(x)
    }

    pub fn terminal_cost(&self, x: &[T]) -> T {
        (self.terminal_cost)(x)
    }

    pub fn control_weight(&self) -> &ControlWeight<T> {
        &self.control_weight
    }

    pub fn weight_at(&self, x: &[T]) -> SymMat<T> {
        match &self.control_weight {
            ControlWeight::Constant(r) => r.clone(),
            ControlWeight::StateDependent(f) => f(x),
        }
    }

    /// c(x) + ½ uᵀR(x)u.
    pub fn stage_cost(&self, x: &[T], u: &[T]) -> T {
        let quad = match &self.control_weight {
            ControlWeight::Constant(r) => r.quad_form(u),
            ControlWeight::StateDependent(f) => f(x).quad_form(u),
        };
        self.state_cost(x) + T::c(0.5) * quad
    }

    /// True when R is constant and exactly the identity.
    pub fn has_identity_weight(&self) -> bool {
        match &self.control_weight {
            ControlWeight::Constant(r) => {
                let n = r.dim();
                (0..n).all(|i| {
                    (0..n).all(|j| {
                        let want = if i == j { T::one() } else { T::zero() };
                        r.get(i, j) == want
                    })
                })
            }
            ControlWeight::StateDependent(_) => false,
        }
    }
}

/// One fully specified open-loop problem: dynamics, cost, horizon, initial
/// state, base noise covariance, and base temperature.
#[derive(Clone)]
pub struct OcpInstance<T> {
    pub dynamics: DynamicsModel<T>,
    pub cost: CostModel<T>,
    pub horizon: usize,
    pub initial_state: Vec<T>,
    pub sigma: CovarianceSpec<T>,
    pub lambda: T,
}

impl<T: Scalar> OcpInstance<T> {
    pub fn new(
        dynamics: DynamicsModel<T>,
        cost: CostModel<T>,
        horizon: usize,
        initial_state: Vec<T>,
        sigma: CovarianceSpec<T>,
        lambda: T,
    ) -> CoreResult<Self> {
        if horizon == 0 {
            return Err(CoreError::ContractViolation("horizon must be at least 1"));
        }
        if !(lambda > T::zero()) {
            return Err(CoreError::ContractViolation(
                "temperature must be strictly positive",
            ));
        }
        if initial_state.len() != dynamics.n_x {
            return Err(CoreError::DimensionMismatch {
                context: "initial state",
                expected: dynamics.n_x,
                got: initial_state.len(),
            });
        }
        if sigma.n_w() != dynamics.n_w || sigma.horizon() != horizon {
            return Err(CoreError::DimensionMismatch {
                context: "noise covariance horizon block",
                expected: horizon * dynamics.n_w,
                got: sigma.horizon() * sigma.n_w(),
            });
        }
        Ok(Self {
            dynamics,
            cost,
            horizon,
            initial_state,
            sigma,
            lambda,
        })
    }

    pub fn control_dim(&self) -> usize {
        self.horizon * self.dynamics.n_u
    }

    pub fn noise_dim(&self) -> usize {
        self.horizon * self.dynamics.n_w
    }

    fn check_control(&self, u: &[T]) -> CoreResult<()> {
        if u.len() != self.control_dim() {
            return Err(CoreError::DimensionMismatch {
                context: "control trajectory",
                expected: self.control_dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    fn check_noise(&self, w: &[T]) -> CoreResult<()> {
        if w.len() != self.noise_dim() {
            return Err(CoreError::DimensionMismatch {
                context: "noise trajectory",
                expected: self.noise_dim(),
                got: w.len(),
            });
        }
        Ok(())
    }

    /// Forward simulation; returns N+1 states flattened row-major.
    pub fn rollout(&self, u: &[T], w: &[T]) -> CoreResult<Vec<T>> {
        self.check_control(u)?;
        self.check_noise(w)?;
        let n_x = self.dynamics.n_x;
        let mut states = vec![T::zero(); (self.horizon + 1) * n_x];
        states[..n_x].copy_from_slice(&self.initial_state);
        let (n_u, n_w) = (self.dynamics.n_u, self.dynamics.n_w);
        for k in 0..self.horizon {
            let (done, rest) = states.split_at_mut((k + 1) * n_x);
            let x = &done[k * n_x..];
            let out = &mut rest[..n_x];
            self.dynamics
                .step(x, &u[k * n_u..(k + 1) * n_u], &w[k * n_w..(k + 1) * n_w], out);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::NumericOverflow {
                    what: "state",
                    step: k,
                });
            }
        }
        Ok(states)
    }

    /// Σ L(x_k, u_k) + E(x_N) along the rollout driven by (U, W).
    pub fn overall_cost(&self, u: &[T], w: &[T]) -> CoreResult<T> {
        let mut scratch = RolloutScratch::new(self);
        self.overall_cost_with(u, w, &mut scratch)
    }

    /// Allocation-free variant of [`overall_cost`] for quadrature loops.
    ///
    /// [`overall_cost`]: OcpInstance::overall_cost
    pub fn overall_cost_with(
        &self,
        u: &[T],
        w: &[T],
        scratch: &mut RolloutScratch<T>,
    ) -> CoreResult<T> {
        self.check_control(u)?;
        self.check_noise(w)?;
        let n_x = self.dynamics.n_x;
        let n_u = self.dynamics.n_u;
        let n_w = self.dynamics.n_w;
        scratch.reset(self);
        let mut total = T::zero();
        for k in 0..self.horizon {
            total += self
                .cost
                .stage_cost(&scratch.x, &u[k * n_u..(k + 1) * n_u]);
            self.dynamics.step(
                &scratch.x,
                &u[k * n_u..(k + 1) * n_u],
                &w[k * n_w..(k + 1) * n_w],
                &mut scratch.x_next,
            );
            if scratch.x_next.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::NumericOverflow {
                    what: "state",
                    step: k,
                });
            }
            std::mem::swap(&mut scratch.x, &mut scratch.x_next);
        }
        total += self.cost.terminal_cost(&scratch.x[..n_x]);
        if !total.is_finite() {
            return Err(CoreError::NumericOverflow {
                what: "cost",
                step: self.horizon,
            });
        }
        Ok(total)
    }

    /// State-only cost E(x_N) + Σ c(x_k) of the noise-free rollout driven by
    /// V through the control slot. Allocation-free variant for hot loops.
    pub fn path_cost_with(&self, v: &[T], scratch: &mut RolloutScratch<T>) -> CoreResult<T> {
        self.check_control(v)?;
        let n_x = self.dynamics.n_x;
        let n_u = self.dynamics.n_u;
        scratch.reset(self);
        let mut total = T::zero();
        for k in 0..self.horizon {
            total += self.cost.state_cost(&scratch.x);
            self.dynamics.step(
                &scratch.x,
                &v[k * n_u..(k + 1) * n_u],
                &scratch.zero_w,
                &mut scratch.x_next,
            );
            if scratch.x_next.iter().any(|val| !val.is_finite()) {
                return Err(CoreError::NumericOverflow {
                    what: "state",
                    step: k,
                });
            }
            std::mem::swap(&mut scratch.x, &mut scratch.x_next);
        }
        total += self.cost.terminal_cost(&scratch.x[..n_x]);
        if !total.is_finite() {
            return Err(CoreError::NumericOverflow {
                what: "cost",
                step: self.horizon,
            });
        }
        Ok(total)
    }

    /// Allocating convenience wrapper around [`path_cost_with`].
    ///
    /// [`path_cost_with`]: OcpInstance::path_cost_with
    pub fn path_cost(&self, v: &[T]) -> CoreResult<T> {
        let mut scratch = RolloutScratch::new(self);
        self.path_cost_with(v, &mut scratch)
    }
}

/// Reusable rollout buffers for the sampling hot loop.
#[derive(Debug, Clone)]
pub struct RolloutScratch<T> {
    x: Vec<T>,
    x_next: Vec<T>,
    zero_w: Vec<T>,
}

impl<T: Scalar> RolloutScratch<T> {
    pub fn new(inst: &OcpInstance<T>) -> Self {
        Self {
            x: vec![T::zero(); inst.dynamics.n_x],
            x_next: vec![T::zero(); inst.dynamics.n_x],
            zero_w: vec![T::zero(); inst.dynamics.n_w],
        }
    }

    fn reset(&mut self, inst: &OcpInstance<T>) {
        self.x.copy_from_slice(&inst.initial_state);
    }
}

/// Low-discrepancy probe states filling `center ± half_width` per component,
/// for numeric structural checks on black-box models.
pub fn default_probe_states<T: Scalar>(
    center: &[T],
    half_width: T,
    count: usize,
) -> Vec<Vec<T>> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    assert!(center.len() <= PRIMES.len());
    (1..=count)
        .map(|i| {
            center
                .iter()
                .enumerate()
                .map(|(d, &c)| {
                    let u = radical_inverse(i, PRIMES[d]);
                    c + (T::c(2.0) * T::c(u) - T::one()) * half_width
                })
                .collect()
        })
        .collect()
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Worst-case probe result for the noise-channel compatibility check.
#[derive(Debug, Clone)]
pub struct NoiseChannelReport<T> {
    pub passes: bool,
    pub max_residual: T,
    pub worst_state: Vec<T>,
}

/// Checks ‖λ B(x) R(x)⁻¹ B(x)ᵀ − G(x) G(x)ᵀ‖_F ≤ tol at every probe state,
/// i.e. that the noise channel is the control channel scaled consistently
/// with the temperature.
pub fn check_noise_channel<T: Scalar>(
    dynamics: &DynamicsModel<T>,
    cost: &CostModel<T>,
    lambda: T,
    probe_states: &[Vec<T>],
    tol: T,
) -> CoreResult<NoiseChannelReport<T>> {
    let (f_tilde, b_map, g_map) = match dynamics.kind() {
        ModelKind::InputAffine { f_tilde, b, g } => (f_tilde, b, g),
        ModelKind::General => {
            return Err(CoreError::UnsupportedModel(
                "noise-channel check requires input-affine dynamics",
            ))
        }
    };
    let _ = f_tilde;
    let (n_x, n_u, n_w) = (dynamics.n_x, dynamics.n_u, dynamics.n_w);
    let mut b_mat = vec![T::zero(); n_x * n_u];
    let mut g_mat = vec![T::zero(); n_x * n_w];
    let mut worst = T::zero();
    let mut worst_state = probe_states.first().cloned().unwrap_or_default();
    for state in probe_states {
        if state.len() != n_x {
            return Err(CoreError::DimensionMismatch {
                context: "probe state",
                expected: n_x,
                got: state.len(),
            });
        }
        b_map(state, &mut b_mat);
        g_map(state, &mut g_mat);
        let r_inv = cost.weight_at(state).inverse()?;
        // residual_{ij} = λ (B R⁻¹ Bᵀ)_{ij} − (G Gᵀ)_{ij}
        let mut frob_sq = T::zero();
        for i in 0..n_x {
            for j in 0..n_x {
                let mut brb = T::zero();
                for a in 0..n_u {
                    for c in 0..n_u {
                        brb += b_mat[i * n_u + a] * r_inv.get(a, c) * b_mat[j * n_u + c];
                    }
                }
                let mut ggt = T::zero();
                for a in 0..n_w {
                    ggt += g_mat[i * n_w + a] * g_mat[j * n_w + a];
                }
                let resid = lambda * brb - ggt;
                frob_sq += resid * resid;
            }
        }
        let frob = frob_sq.sqrt();
        if frob > worst {
            worst = frob;
            worst_state = state.clone();
        }
    }
    Ok(NoiseChannelReport {
        passes: worst <= tol,
        max_residual: worst,
        worst_state,
    })
}

/// Result of rewriting an input-affine problem with identity control weight.
pub struct CanonicalForm<T> {
    pub dynamics: DynamicsModel<T>,
    pub cost: CostModel<T>,
    /// Per-step noise covariance of the rewritten problem is
    /// `noise_scale · I`.
    pub noise_scale: T,
    /// u = R^{−1/2} ū for constant R; `None` when R is state-dependent.
    pub control_back_map: Option<SymMat<T>>,
}

impl<T: Scalar> CanonicalForm<T> {
    /// Maps a control trajectory of the rewritten problem back to original
    /// controls, blockwise per step.
    pub fn control_from_canonical(&self, u_bar: &[T], n_u: usize) -> CoreResult<Vec<T>> {
        let map = self.control_back_map.as_ref().ok_or(CoreError::UnsupportedModel(
            "control back-map needs a constant control weight",
        ))?;
        if u_bar.len() % n_u != 0 {
            return Err(CoreError::DimensionMismatch {
                context: "canonical control trajectory",
                expected: n_u,
                got: u_bar.len(),
            });
        }
        let mut out = vec![T::zero(); u_bar.len()];
        for k in 0..u_bar.len() / n_u {
            map.mul_vec(
                &u_bar[k * n_u..(k + 1) * n_u],
                &mut out[k * n_u..(k + 1) * n_u],
            );
        }
        Ok(out)
    }
}

/// Rewrites an input-affine problem so the control weight is the identity
/// and the noise covariance is λI: x⁺ = f̃(x) + B̄(x)(ū + w̄) with
/// B̄ = B R^{−1/2} and u = R^{−1/2} ū. Costs of matched trajectories agree
/// exactly for constant R.
///
/// When probe states are supplied the noise-channel condition is verified
/// first and a violation beyond `tol` fails the transformation.
pub fn to_canonical<T: Scalar>(
    dynamics: &DynamicsModel<T>,
    cost: &CostModel<T>,
    lambda: T,
    probe_states: &[Vec<T>],
    tol: T,
) -> CoreResult<CanonicalForm<T>> {
    let (f_tilde, b_map, g_map) = match dynamics.kind() {
        ModelKind::InputAffine { f_tilde, b, g } => (f_tilde.clone(), b.clone(), g.clone()),
        ModelKind::General => {
            return Err(CoreError::UnsupportedModel(
                "canonical form requires input-affine dynamics",
            ))
        }
    };
    let _ = g_map;
    if !probe_states.is_empty() {
        let report = check_noise_channel(dynamics, cost, lambda, probe_states, tol)?;
        if !report.passes {
            return Err(CoreError::TransformationInvalid(
                "noise channel is inconsistent with the control channel at a probe state",
            ));
        }
    }
    let (n_x, n_u) = (dynamics.n_x, dynamics.n_u);
    let (b_bar, back_map): (StateMap<T>, Option<SymMat<T>>) = match cost.control_weight() {
        ControlWeight::Constant(r) => {
            let r_inv_sqrt = r.inv_sqrt_sqrt_guard()?;
            let r_is = r_inv_sqrt.clone();
            let b = b_map.clone();
            let map: StateMap<T> = Arc::new(move |x, out| {
                let mut b_mat = vec![T::zero(); n_x * n_u];
                b(x, &mut b_mat);
                for i in 0..n_x {
                    for j in 0..n_u {
                        let mut acc = T::zero();
                        for a in 0..n_u {
                            acc += b_mat[i * n_u + a] * r_is.get(a, j);
                        }
                        out[i * n_u + j] = acc;
                    }
                }
            });
            (map, Some(r_inv_sqrt))
        }
        ControlWeight::StateDependent(rf) => {
            let rf = rf.clone();
            let b = b_map.clone();
            let map: StateMap<T> = Arc::new(move |x, out| {
                let r_is = rf(x)
                    .inv_sqrt_sym()
                    .expect("state-dependent control weight must stay positive definite");
                let mut b_mat = vec![T::zero(); n_x * n_u];
                b(x, &mut b_mat);
                for i in 0..n_x {
                    for j in 0..n_u {
                        let mut acc = T::zero();
                        for a in 0..n_u {
                            acc += b_mat[i * n_u + a] * r_is.get(a, j);
                        }
                        out[i * n_u + j] = acc;
                    }
                }
            });
            (map, None)
        }
    };
    let new_dynamics = DynamicsModel::input_affine(
        n_x,
        n_u,
        n_u,
        f_tilde,
        b_bar.clone(),
        b_bar,
    );
    let new_cost = CostModel::new(
        cost.state_cost.clone(),
        ControlWeight::Constant(SymMat::identity(n_u)),
        cost.terminal_cost.clone(),
    );
    Ok(CanonicalForm {
        dynamics: new_dynamics,
        cost: new_cost,
        noise_scale: lambda,
        control_back_map: back_map,
    })
}

impl<T: Scalar> SymMat<T> {
    /// Inverse square root with the covariance error relabeled for control
    /// weights.
    fn inv_sqrt_sqrt_guard(&self) -> CoreResult<SymMat<T>> {
        self.inv_sqrt_sym().map_err(|_| {
            CoreError::TransformationInvalid("control weight has no positive-definite square root")
        })
    }
}
