//! Statistical and reproducibility properties of the trajectory sampler.

use approx::assert_relative_eq;
use proptest::prelude::*;

use mppi_core::sampling::{draw_batch, importance_correction, log_density, CovarianceSpec};
use mppi_core::scenarios::build_instance;
use mppi_core::solver::{softmin_weights, standard_mppi_step};
use mppi_core::SymMat64;

fn scalar_unit_cov(horizon: usize) -> CovarianceSpec<f64> {
    CovarianceSpec::identity(1, horizon).unwrap()
}

#[test]
fn standard_normal_batch_moments() {
    let m = 100_000;
    let batch = draw_batch(&scalar_unit_cov(1), m, 42).unwrap();
    let values: Vec<f64> = batch.iter().map(|w| w[0]).collect();
    let mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
    // 4/√M band on the mean, generous two-percent band on the variance.
    assert!(mean.abs() <= 0.0127, "mean {mean} outside 4/sqrt(M) band");
    assert!((0.98..=1.02).contains(&var), "variance {var} outside band");
}

#[test]
fn batches_and_steps_identical_across_worker_counts() {
    let inst = build_instance::<f64>("affine2", 1.0, 1.0).unwrap();
    let u_hat = [0.1, -0.2];
    let mut batches = Vec::new();
    let mut controls = Vec::new();
    for workers in [1usize, 4, 16] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        let (batch, outcome) = pool.install(|| {
            let batch = draw_batch(&inst.sigma, 20_000, 9).unwrap();
            let outcome =
                standard_mppi_step(&inst, &u_hat, &inst.sigma, inst.lambda, 20_000, 9).unwrap();
            (batch, outcome)
        });
        batches.push(batch);
        controls.push(outcome.control);
    }
    for other in &batches[1..] {
        for (a, b) in batches[0].iter().zip(other.iter()) {
            assert_eq!(a, b, "noise bytes differ across worker counts");
        }
    }
    for other in &controls[1..] {
        assert_eq!(&controls[0], other, "controls differ across worker counts");
    }
}

fn max_covariance_error(m: usize, seed: u64) -> f64 {
    let per_step = SymMat64::from_rows(2, vec![2.0, 0.6, 0.6, 1.0]).unwrap();
    let cov = CovarianceSpec::new(per_step.clone(), 2, 1.0).unwrap();
    let dim = cov.total_dim();
    let batch = draw_batch(&cov, m, seed).unwrap();
    let mut mean = vec![0.0; dim];
    for w in batch.iter() {
        for (acc, v) in mean.iter_mut().zip(w) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= m as f64;
    }
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for w in batch.iter() {
                acc += (w[i] - mean[i]) * (w[j] - mean[j]);
            }
            let sample = acc / m as f64;
            // Lifted covariance is block-diagonal: per-step blocks on the
            // diagonal, exact zeros across steps.
            let target = if i / 2 == j / 2 {
                per_step.get(i % 2, j % 2)
            } else {
                0.0
            };
            worst = worst.max((sample - target).abs());
        }
    }
    worst
}

#[test]
fn sample_covariance_tightens_at_root_m() {
    let coarse = max_covariance_error(2_000, 314);
    let fine = max_covariance_error(128_000, 314);
    // 64× the samples should cut the error ~8×; require at least 2× to keep
    // the check robust against an unlucky draw, plus an absolute band.
    assert!(
        fine < coarse / 2.0,
        "no 1/sqrt(M) improvement: {coarse} -> {fine}"
    );
    assert!(fine < 0.03, "covariance error {fine} too large at M=128000");
}

/// Estimates E[g(V)] under the softmin-weighted trajectory distribution,
/// sampling around `u_hat` with the additive cost correction. Returns the
/// estimate and its weighted standard error.
fn weighted_estimate(u_hat: f64, seed: u64) -> (f64, f64) {
    let inst = build_instance::<f64>("quartic", 1.0, 1.0).unwrap();
    let beta = 0.5f64;
    let lambda = beta * beta;
    let cov = inst.sigma.with_scale(beta * beta).unwrap();
    let m = 100_000;
    let batch = draw_batch(&cov, m, seed).unwrap();
    let costs: Vec<f64> = batch
        .iter()
        .map(|w| {
            inst.path_cost(&[u_hat + w[0]]).unwrap()
                + importance_correction(&cov, lambda, &[u_hat], w).unwrap()
        })
        .collect();
    let weights = softmin_weights(&costs, lambda).unwrap();
    let g: Vec<f64> = batch.iter().map(|w| (u_hat + w[0]).tanh()).collect();
    let est: f64 = weights
        .weights
        .iter()
        .zip(&g)
        .map(|(&omega, &gi)| omega * gi)
        .sum();
    let var: f64 = weights
        .weights
        .iter()
        .zip(&g)
        .map(|(&omega, &gi)| omega * omega * (gi - est) * (gi - est))
        .sum();
    (est, var.sqrt())
}

#[test]
fn shifted_corrected_estimator_is_unbiased() {
    // A bounded test function must have the same weighted expectation whether
    // sampling is centered at zero (no correction needed) or at a shifted
    // mean with the corrected costs.
    let (plain, se_plain) = weighted_estimate(0.0, 2024);
    let (shifted, se_shifted) = weighted_estimate(0.3, 4048);
    let combined = (se_plain * se_plain + se_shifted * se_shifted).sqrt();
    assert!(
        (plain - shifted).abs() <= 3.0 * combined,
        "estimates {plain} vs {shifted} differ beyond 3 combined SE {combined:.2e}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Scaling the covariance by s is the same as evaluating the unit-scale
    /// density at W/√s and paying the Jacobian dim/2·ln s.
    #[test]
    fn log_density_scale_decomposition(
        w in proptest::collection::vec(-3.0f64..3.0, 4),
        scale in 0.1f64..10.0,
    ) {
        let unit = scalar_unit_cov(4);
        let scaled = unit.with_scale(scale).unwrap();
        let rescaled: Vec<f64> = w.iter().map(|v| v / scale.sqrt()).collect();
        let zero = [0.0; 4];
        let lhs = log_density(&scaled, &zero, &w).unwrap();
        let rhs = log_density(&unit, &zero, &rescaled).unwrap()
            - 0.5 * 4.0 * scale.ln();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-10, max_relative = 1e-10);
    }

    /// The correction is bilinear in (Û, W).
    #[test]
    fn correction_is_bilinear(
        w in proptest::collection::vec(-2.0f64..2.0, 3),
        u in proptest::collection::vec(-2.0f64..2.0, 3),
        a in -4.0f64..4.0,
    ) {
        let cov = scalar_unit_cov(3);
        let scaled_u: Vec<f64> = u.iter().map(|v| v * a).collect();
        let base = importance_correction(&cov, 1.0, &u, &w).unwrap();
        let scaled = importance_correction(&cov, 1.0, &scaled_u, &w).unwrap();
        assert_relative_eq!(scaled, a * base, epsilon = 1e-10, max_relative = 1e-10);
    }
}
