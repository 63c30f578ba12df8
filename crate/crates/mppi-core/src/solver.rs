//! Softmin weighting, the single-shot sampling update, and the iterative
//! solve that shrinks the sampling covariance geometrically.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{CoreError, CoreResult};
use crate::problem::{OcpInstance, RolloutScratch};
use crate::sampling::{correction_functional, draw_batch, CovarianceSpec, SampleBatch};
use crate::scalar::Scalar;

/// Tuning knobs of the iterative solver.
///
/// The base covariance lives on the problem instance; the solver scales it by
/// the squared shrink factor each iteration.
#[derive(Debug, Clone)]
pub struct MppiConfig<T> {
    pub samples: usize,
    pub iterations: usize,
    pub shrink_factor: T,
    pub lambda0: T,
    pub init_control: Vec<T>,
    pub seed: u64,
}

impl<T: Scalar> MppiConfig<T> {
    pub fn validate(&self, inst: &OcpInstance<T>) -> CoreResult<()> {
        if self.samples < 2 {
            return Err(CoreError::ContractViolation("need at least two samples"));
        }
        if self.iterations == 0 {
            return Err(CoreError::ContractViolation(
                "need at least one iteration",
            ));
        }
        if !(self.shrink_factor > T::zero() && self.shrink_factor < T::one()) {
            return Err(CoreError::ContractViolation(
                "shrink factor must lie strictly between 0 and 1",
            ));
        }
        if !(self.lambda0 > T::zero()) || !self.lambda0.is_finite() {
            return Err(CoreError::ContractViolation(
                "base temperature must be finite and strictly positive",
            ));
        }
        if self.init_control.len() != inst.control_dim() {
            return Err(CoreError::DimensionMismatch {
                context: "initial control trajectory",
                expected: inst.control_dim(),
                got: self.init_control.len(),
            });
        }
        Ok(())
    }
}

/// Normalized softmin weights over one sample batch.
#[derive(Debug, Clone)]
pub struct WeightVector<T> {
    /// One weight per sample; rejected (non-finite cost) samples carry 0.
    pub weights: Vec<T>,
    /// Minimum finite cost, subtracted before exponentiation.
    pub psi: T,
    /// Normalizer: sum of the shifted exponentials.
    pub eta: T,
    /// Number of samples whose cost was non-finite.
    pub rejected: usize,
}

impl<T: Scalar> WeightVector<T> {
    /// 1 / Σ ω², the usual effective sample size.
    pub fn effective_sample_size(&self) -> T {
        let mut sum_sq = T::zero();
        for &w in &self.weights {
            sum_sq += w * w;
        }
        if sum_sq > T::zero() {
            T::one() / sum_sq
        } else {
            T::zero()
        }
    }

    pub fn max_weight(&self) -> T {
        self.weights
            .iter()
            .copied()
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// −Σ ω ln ω with the 0·ln0 = 0 convention.
    pub fn entropy(&self) -> T {
        let mut acc = T::zero();
        for &w in &self.weights {
            if w > T::zero() {
                acc -= w * w.ln();
            }
        }
        acc
    }
}

/// Exponential softmin weights ω_m ∝ exp(−(S_m − ψ)/λ) with ψ = min S.
///
/// Non-finite costs are excluded and counted instead of aborting; the offset
/// subtraction makes the weights invariant to constant cost shifts.
pub fn softmin_weights<T: Scalar>(costs: &[T], lambda: T) -> CoreResult<WeightVector<T>> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(CoreError::ContractViolation(
            "temperature must be finite and strictly positive",
        ));
    }
    let mut psi = T::infinity();
    let mut rejected = 0usize;
    for &c in costs {
        if c.is_finite() {
            if c < psi {
                psi = c;
            }
        } else {
            rejected += 1;
        }
    }
    if rejected == costs.len() {
        return Err(CoreError::NoValidSamples);
    }
    let mut weights = vec![T::zero(); costs.len()];
    let mut eta = T::zero();
    for (w, &c) in weights.iter_mut().zip(costs) {
        if c.is_finite() {
            *w = (-(c - psi) / lambda).exp();
            eta += *w;
        }
    }
    for w in &mut weights {
        *w = *w / eta;
    }
    Ok(WeightVector {
        weights,
        psi,
        eta,
        rejected,
    })
}

/// Result of one sampling update around a mean control trajectory.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    /// Updated mean: û_k + Σ_m ω_m w_k^m.
    pub control: Vec<T>,
    pub weights: WeightVector<T>,
    /// Standard error of the weighted-mean update, per component:
    /// sqrt(Σ_m ω_m² (w^m − δ)²). This is the Monte Carlo noise floor of the
    /// update itself.
    pub update_se: Vec<T>,
}

/// Weighted-mean update δ = Σ_m ω_m w^m and its per-component standard
/// error, accumulated in fixed sample order.
pub fn weighted_update<T: Scalar>(
    batch: &SampleBatch<T>,
    weights: &WeightVector<T>,
) -> (Vec<T>, Vec<T>) {
    let dim = batch.dim();
    let mut delta = vec![T::zero(); dim];
    for (m, w) in batch.iter().enumerate() {
        let omega = weights.weights[m];
        if omega > T::zero() {
            for c in 0..dim {
                delta[c] += omega * w[c];
            }
        }
    }
    let mut se = vec![T::zero(); dim];
    for (m, w) in batch.iter().enumerate() {
        let omega = weights.weights[m];
        if omega > T::zero() {
            for c in 0..dim {
                let d = w[c] - delta[c];
                se[c] += omega * omega * d * d;
            }
        }
    }
    for v in &mut se {
        *v = v.sqrt();
    }
    (delta, se)
}

/// One softmin-weighted sampling update of the mean control trajectory.
///
/// Draws M noise trajectories from `cov`, scores the shifted controls
/// Û + W^m by state path cost plus the importance correction
/// λ Wᵀ (scale·Σ̄)⁻¹ Û, and moves every û_k by the weighted noise mean.
pub fn standard_mppi_step<T: Scalar>(
    inst: &OcpInstance<T>,
    u_hat: &[T],
    cov: &CovarianceSpec<T>,
    lambda: T,
    samples: usize,
    seed: u64,
) -> CoreResult<StepOutcome<T>>
where
    StandardNormal: Distribution<T>,
{
    if u_hat.len() != inst.control_dim() {
        return Err(CoreError::DimensionMismatch {
            context: "mean control trajectory",
            expected: inst.control_dim(),
            got: u_hat.len(),
        });
    }
    if cov.total_dim() != inst.noise_dim() || inst.noise_dim() != inst.control_dim() {
        return Err(CoreError::DimensionMismatch {
            context: "additive control noise",
            expected: inst.control_dim(),
            got: cov.total_dim(),
        });
    }
    let batch = draw_batch(cov, samples, seed)?;
    let functional = correction_functional(cov, lambda, u_hat)?;
    let dim = batch.dim();
    let costs: CoreResult<Vec<T>> = batch
        .par_iter()
        .map_init(
            || (RolloutScratch::new(inst), vec![T::zero(); dim]),
            |(scratch, shifted), w| {
                for c in 0..dim {
                    shifted[c] = u_hat[c] + w[c];
                }
                match inst.path_cost_with(shifted, scratch) {
                    Ok(path) => {
                        let mut corr = T::zero();
                        for c in 0..dim {
                            corr += w[c] * functional[c];
                        }
                        Ok(path + corr)
                    }
                    Err(CoreError::NumericOverflow { .. }) => Ok(T::infinity()),
                    Err(other) => Err(other),
                }
            },
        )
        .collect();
    let weights = softmin_weights(&costs?, lambda)?;
    let (delta, update_se) = weighted_update(&batch, &weights);
    let mut control = u_hat.to_vec();
    for (u, d) in control.iter_mut().zip(delta.iter()) {
        *u += *d;
    }
    Ok(StepOutcome {
        control,
        weights,
        update_se,
    })
}

/// One iteration of the shrinking solve, recorded for diagnostics.
#[derive(Debug, Clone)]
pub struct IterateRecord<T> {
    pub iteration: usize,
    pub beta: T,
    /// Mean control after this iteration's update.
    pub control: Vec<T>,
    /// Best (minimum finite) sampled cost ψ of the iteration.
    pub best_cost: T,
    pub effective_sample_size: T,
    pub max_weight: T,
    pub weight_entropy: T,
    pub rejected: usize,
    /// Set when the effective sample size dropped below 1% of M.
    pub ess_warning: bool,
    pub update_se: Vec<T>,
}

/// Outcome of a full shrinking solve.
#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub solution: Vec<T>,
    /// Noise-free cost of the solution, recomputed from the model rather
    /// than copied from any weighted estimate.
    pub value: T,
    pub history: Vec<IterateRecord<T>>,
}

/// Sampling seed for iteration j.
///
/// Iteration 0 uses the master seed unchanged, so a single-iteration solve
/// reproduces a standard step with that seed bit for bit; later iterations
/// mix j through a 64-bit finalizer to decorrelate their streams.
pub fn iteration_seed(master: u64, iteration: usize) -> u64 {
    if iteration == 0 {
        return master;
    }
    let mut z = master.wrapping_add((iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Iterative solve: for j = 0..I−1 set β = ν^j, λ = β²λ₀, covariance scale
/// β² times the instance's base scale, and apply one sampling update around
/// the current mean. With I = 1 this is exactly the standard single-shot
/// update at β = 1.
pub fn deterministic_mppi_solve<T: Scalar>(
    inst: &OcpInstance<T>,
    cfg: &MppiConfig<T>,
) -> CoreResult<SolveReport<T>>
where
    StandardNormal: Distribution<T>,
{
    cfg.validate(inst)?;
    let base_scale = inst.sigma.scale();
    let ess_floor = T::from_usize(cfg.samples).unwrap() * T::c(0.01);
    let mut control = cfg.init_control.clone();
    let mut history = Vec::with_capacity(cfg.iterations);
    for j in 0..cfg.iterations {
        let beta = cfg.shrink_factor.powi(j as i32);
        let cov_j = inst.sigma.with_scale(beta * beta * base_scale)?;
        let lambda_j = beta * beta * cfg.lambda0;
        let outcome = standard_mppi_step(
            inst,
            &control,
            &cov_j,
            lambda_j,
            cfg.samples,
            iteration_seed(cfg.seed, j),
        )?;
        let ess = outcome.weights.effective_sample_size();
        history.push(IterateRecord {
            iteration: j,
            beta,
            control: outcome.control.clone(),
            best_cost: outcome.weights.psi,
            effective_sample_size: ess,
            max_weight: outcome.weights.max_weight(),
            weight_entropy: outcome.weights.entropy(),
            rejected: outcome.weights.rejected,
            ess_warning: ess < ess_floor,
            update_se: outcome.update_se.clone(),
        });
        control = outcome.control;
    }
    let value = value_of(inst, &control)?;
    Ok(SolveReport {
        solution: control,
        value,
        history,
    })
}

/// Noise-free cost J(U, 0) of a control trajectory.
pub fn value_of<T: Scalar>(inst: &OcpInstance<T>, u: &[T]) -> CoreResult<T> {
    let zeros = vec![T::zero(); inst.noise_dim()];
    inst.overall_cost(u, &zeros)
}

/// First-step control of the rewritten (identity-weight) problem, estimated
/// by softmin-weighting uncontrolled samples.
///
/// The instance must be input-affine with a consistent noise channel; the
/// estimate is the k = 0 block of a standard update at Û = 0 on the
/// canonical form, mapped back through u = R^{−1/2} ū. With R = I and base
/// covariance λI this is bit-identical to the plain standard step.
pub fn cls_mppi_u0<T: Scalar>(
    inst: &OcpInstance<T>,
    samples: usize,
    seed: u64,
) -> CoreResult<Vec<T>>
where
    StandardNormal: Distribution<T>,
{
    use crate::linalg::SymMat;
    use crate::problem::{default_probe_states, to_canonical, OcpInstance as Inst};

    let probes = default_probe_states(&inst.initial_state, T::c(3.0), 100);
    let canon = to_canonical(&inst.dynamics, &inst.cost, inst.lambda, &probes, T::c(1e-8))?;
    let n_u = inst.dynamics.n_u;
    let sigma = CovarianceSpec::new(
        SymMat::identity(n_u).scaled(canon.noise_scale),
        inst.horizon,
        inst.sigma.scale(),
    )?;
    let canon_inst = Inst::new(
        canon.dynamics.clone(),
        canon.cost.clone(),
        inst.horizon,
        inst.initial_state.clone(),
        sigma.clone(),
        inst.lambda,
    )?;
    let zero = vec![T::zero(); canon_inst.control_dim()];
    let outcome = standard_mppi_step(&canon_inst, &zero, &sigma, inst.lambda, samples, seed)?;
    canon.control_from_canonical(&outcome.control[..n_u], n_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMat;
    use crate::problem::{ControlWeight, CostModel, DynamicsModel};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn linear_zero_cost(n: usize) -> OcpInstance<f64> {
        let dynamics = DynamicsModel::general(
            1,
            1,
            1,
            Arc::new(|x: &[f64], u: &[f64], w: &[f64], out: &mut [f64]| {
                out[0] = x[0] + u[0] + w[0];
            }),
        );
        let cost = CostModel::new(
            Arc::new(|_: &[f64]| 0.0),
            ControlWeight::Constant(SymMat::identity(1)),
            Arc::new(|_: &[f64]| 0.0),
        );
        OcpInstance::new(
            dynamics,
            cost,
            n,
            vec![0.0],
            CovarianceSpec::identity(1, n).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn equal_costs_give_uniform_weights() {
        let w = softmin_weights(&[3.0, 3.0, 3.0, 3.0], 0.7).unwrap();
        for &omega in &w.weights {
            assert_relative_eq!(omega, 0.25, epsilon = 1e-15);
        }
        assert_eq!(w.psi, 3.0);
        assert_eq!(w.rejected, 0);
    }

    #[test]
    fn dominant_sample_takes_all_weight() {
        let w = softmin_weights(&[0.0, 1e6], 1.0).unwrap();
        assert_eq!(w.weights[0], 1.0);
        assert_eq!(w.weights[1], 0.0);
    }

    #[test]
    fn ln2_cost_gap_gives_two_thirds() {
        let lambda = 0.37;
        let w = softmin_weights(&[0.0, lambda * 2.0f64.ln()], lambda).unwrap();
        assert_relative_eq!(w.weights[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(w.weights[1], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn dyadic_shift_leaves_weights_bit_identical() {
        let costs = [0.5, 1.25, 3.0, 0.75];
        let shifted: Vec<f64> = costs.iter().map(|c| c + 8.0).collect();
        let a = softmin_weights(&costs, 0.5).unwrap();
        let b = softmin_weights(&shifted, 0.5).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn non_finite_costs_are_rejected_not_fatal() {
        let w = softmin_weights(&[1.0, f64::INFINITY, 2.0, f64::NAN], 1.0).unwrap();
        assert_eq!(w.rejected, 2);
        assert_eq!(w.weights[1], 0.0);
        assert_eq!(w.weights[3], 0.0);
        let total: f64 = w.weights.iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);

        assert!(matches!(
            softmin_weights(&[f64::INFINITY, f64::NAN], 1.0),
            Err(CoreError::NoValidSamples)
        ));
        assert!(matches!(
            softmin_weights(&[1.0, 2.0], 0.0),
            Err(CoreError::ContractViolation(_))
        ));
    }

    #[test]
    fn huge_temperature_recovers_sample_mean() {
        let inst = linear_zero_cost(1);
        let cov = CovarianceSpec::identity(1, 1).unwrap();
        let m = 20_000;
        let out = standard_mppi_step(&inst, &[0.0], &cov, 1e12, m, 3).unwrap();
        let batch = draw_batch(&cov, m, 3).unwrap();
        let mean: f64 = batch.iter().map(|w| w[0]).sum::<f64>() / m as f64;
        assert!((out.control[0] - mean).abs() < 1e-8);
        assert!(out.control[0].abs() < 0.03);
    }

    #[test]
    fn symmetric_two_sample_update_is_zero() {
        let batch = SampleBatch::from_raw(1, vec![0.25, -0.25], 0);
        let weights = softmin_weights(&[1.0, 1.0], 1.0).unwrap();
        let (delta, se) = weighted_update(&batch, &weights);
        assert_eq!(delta[0], 0.0);
        assert_relative_eq!(se[0], (2.0f64 * 0.5 * 0.5 * 0.25 * 0.25).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn single_iteration_solve_equals_standard_step() {
        let inst = linear_zero_cost(2);
        let cfg = MppiConfig {
            samples: 500,
            iterations: 1,
            shrink_factor: 0.5f64.sqrt(),
            lambda0: 1.0,
            init_control: vec![0.3, -0.1],
            seed: 99,
        };
        let report = deterministic_mppi_solve(&inst, &cfg).unwrap();
        let step =
            standard_mppi_step(&inst, &[0.3, -0.1], &inst.sigma, 1.0, 500, 99).unwrap();
        assert_eq!(report.solution, step.control);
        assert_eq!(report.history.len(), 1);
        assert_eq!(report.history[0].beta, 1.0);
    }

    #[test]
    fn iteration_seeds_are_distinct_and_stable() {
        assert_eq!(iteration_seed(42, 0), 42);
        let a = iteration_seed(42, 1);
        let b = iteration_seed(42, 2);
        assert_ne!(a, b);
        assert_ne!(a, 42);
        assert_eq!(a, iteration_seed(42, 1));
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let inst = linear_zero_cost(1);
        let base = MppiConfig {
            samples: 100,
            iterations: 3,
            shrink_factor: 0.7,
            lambda0: 1.0,
            init_control: vec![0.0],
            seed: 0,
        };
        assert!(base.validate(&inst).is_ok());
        let mut bad = base.clone();
        bad.samples = 1;
        assert!(bad.validate(&inst).is_err());
        let mut bad = base.clone();
        bad.shrink_factor = 1.0;
        assert!(bad.validate(&inst).is_err());
        let mut bad = base.clone();
        bad.init_control = vec![0.0, 0.0];
        assert!(bad.validate(&inst).is_err());
    }

    #[test]
    fn beta_schedule_is_geometric() {
        let inst = linear_zero_cost(1);
        let cfg = MppiConfig {
            samples: 64,
            iterations: 4,
            shrink_factor: 0.5f64.sqrt(),
            lambda0: 1.0,
            init_control: vec![0.0],
            seed: 5,
        };
        let report = deterministic_mppi_solve(&inst, &cfg).unwrap();
        for (j, rec) in report.history.iter().enumerate() {
            assert_relative_eq!(rec.beta, 0.5f64.sqrt().powi(j as i32), epsilon = 1e-15);
        }
        for pair in report.history.windows(2) {
            assert!(pair[1].beta < pair[0].beta);
        }
    }
}
