//! Solver-level properties: weight algebra, convergence behavior, and
//! agreement between the sampling solvers and the exact weighted mean.

use std::sync::Arc;

use proptest::prelude::*;

use mppi_core::linalg::SymMat;
use mppi_core::oracles::{gibbs_mean, GibbsParams};
use mppi_core::problem::{ControlWeight, CostModel, DynamicsModel, OcpInstance};
use mppi_core::sampling::CovarianceSpec;
use mppi_core::scenarios::{build_instance, default_config};
use mppi_core::solver::{
    cls_mppi_u0, deterministic_mppi_solve, softmin_weights, standard_mppi_step, value_of,
};

#[test]
fn value_of_matches_landmark_evaluations() {
    let quartic = build_instance::<f64>("quartic", 1.0, 1.0).unwrap();
    assert!(value_of(&quartic, &[0.0]).unwrap().abs() < 1e-15);
    let arctan = build_instance::<f64>("arctan2", 1.0, 1.0).unwrap();
    assert_eq!(value_of(&arctan, &[0.0, 0.0]).unwrap(), 63.0);
}

#[test]
fn quartic_solve_escapes_secondary_basin() {
    let inst = build_instance::<f64>("quartic", 1.0, 1.0).unwrap();
    let mut cfg = default_config::<f64>("quartic").unwrap();
    cfg.iterations = 12;
    cfg.init_control = vec![0.6];
    cfg.seed = 21;
    let report = deterministic_mppi_solve(&inst, &cfg).unwrap();
    assert!(
        report.solution[0].abs() <= 5e-3,
        "final control {} not at the global minimum",
        report.solution[0]
    );
    assert_eq!(report.history.len(), 12);
}

#[test]
fn arctan_solve_reaches_noise_free_reference() {
    // Reference minimizer from the exhaustive deterministic oracle.
    let u_star = [0.68215121, 0.68215122];
    let inst = build_instance::<f64>("arctan2", 1.0, 1.0).unwrap();
    let cfg = default_config::<f64>("arctan2").unwrap();
    let report = deterministic_mppi_solve(&inst, &cfg).unwrap();
    let err = report
        .solution
        .iter()
        .zip(&u_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(err <= 1e-2, "final error {err} vs deterministic reference");
}

#[test]
fn single_step_matches_exact_weighted_mean() {
    // At β = 1 the sampled softmin update must sit within its own Monte Carlo
    // band around the quadrature value of the exact weighted mean.
    let inst = build_instance::<f64>("quartic", 1.0, 1.0).unwrap();
    let exact = gibbs_mean(&inst, 1.0, 1.0, &GibbsParams::for_dim(1)).unwrap();
    let outcome = standard_mppi_step(&inst, &[0.0], &inst.sigma, 1.0, 100_000, 5).unwrap();
    let diff = (outcome.control[0] - exact[0]).abs();
    let band = 3.0 * outcome.update_se[0] + 1e-9;
    assert!(diff <= band, "sampled {} vs exact {} (band {band:.2e})", outcome.control[0], exact[0]);
}

#[test]
fn exact_schedule_descends_monotonically() {
    // Driving the iteration with the exact weighted mean instead of sampling,
    // the noise-free value is non-increasing once the shrink is past β ≈ ¼.
    let inst = build_instance::<f64>("quartic", 1.0, 1.0).unwrap();
    let params = GibbsParams::for_dim(1);
    let nu = std::f64::consts::FRAC_1_SQRT_2;
    let mut prev = f64::INFINITY;
    for j in 0..9 {
        let beta = 0.25 * nu.powi(j);
        let mean = gibbs_mean(&inst, beta, 1.0, &params).unwrap();
        let value = value_of(&inst, &mean).unwrap();
        assert!(
            value <= prev + 1e-6,
            "value rose from {prev} to {value} at beta {beta}"
        );
        prev = value;
    }
}

#[test]
fn first_stage_estimate_equals_standard_step_for_identity_weight() {
    // With identity control weight the canonical form is the instance itself,
    // so the closed-loop first-stage estimator must reproduce the standard
    // update bit for bit.
    let inst = build_instance::<f64>("affine2", 1.0, 1.0).unwrap();
    let u0 = cls_mppi_u0(&inst, 20_000, 7).unwrap();
    let step = standard_mppi_step(&inst, &[0.0, 0.0], &inst.sigma, inst.lambda, 20_000, 7).unwrap();
    assert_eq!(u0.len(), 1);
    assert_eq!(u0[0].to_bits(), step.control[0].to_bits());
}

fn symmetric_instance() -> OcpInstance<f64> {
    // Even costs, odd dynamics, centered start: the optimal first control is
    // exactly zero by symmetry.
    let dynamics = DynamicsModel::input_affine(
        1,
        1,
        1,
        Arc::new(|x: &[f64], out: &mut [f64]| out.copy_from_slice(x)),
        Arc::new(|_x: &[f64], out: &mut [f64]| out.fill(1.0)),
        Arc::new(|_x: &[f64], out: &mut [f64]| out.fill(1.0)),
    );
    let cost = CostModel::new(
        Arc::new(|_x: &[f64]| 0.0),
        ControlWeight::Constant(SymMat::identity(1)),
        Arc::new(|x: &[f64]| x[0].powi(6)),
    );
    OcpInstance::new(
        dynamics,
        cost,
        2,
        vec![0.0],
        CovarianceSpec::identity(1, 2).unwrap(),
        1.0,
    )
    .unwrap()
}

#[test]
fn symmetric_problem_gives_zero_first_control() {
    let inst = symmetric_instance();
    let u0 = cls_mppi_u0(&inst, 100_000, 11).unwrap();
    // Same canonical path as the standard step, whose update_se provides the
    // Monte Carlo band.
    let step = standard_mppi_step(&inst, &[0.0, 0.0], &inst.sigma, inst.lambda, 100_000, 11).unwrap();
    assert!(
        u0[0].abs() <= 3.0 * step.update_se[0],
        "asymmetry {} beyond 3 SE {:.2e}",
        u0[0],
        step.update_se[0]
    );
}

#[test]
fn full_solve_identical_across_worker_counts() {
    let inst = build_instance::<f64>("arctan2", 1.0, 1.0).unwrap();
    let mut cfg = default_config::<f64>("arctan2").unwrap();
    cfg.iterations = 3;
    cfg.samples = 20_000;
    let mut solutions: Vec<Vec<u64>> = Vec::new();
    for workers in [1usize, 4, 16] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        let report = pool.install(|| deterministic_mppi_solve(&inst, &cfg).unwrap());
        solutions.push(report.solution.iter().map(|v| v.to_bits()).collect());
    }
    assert_eq!(solutions[0], solutions[1]);
    assert_eq!(solutions[0], solutions[2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Weights are a probability vector for any finite costs and temperature.
    #[test]
    fn weights_always_normalized(
        costs in proptest::collection::vec(-1e5f64..1e5, 2..40),
        log_lambda in -3.0f64..3.0,
    ) {
        let lambda = 10f64.powf(log_lambda);
        let w = softmin_weights(&costs, lambda).unwrap();
        let total: f64 = w.weights.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "sum {total}");
        prop_assert!(w.weights.iter().all(|&x| x >= 0.0));
        prop_assert_eq!(w.rejected, 0);
    }

    /// Costs and shift both exactly representable on a 2⁻⁴ grid: the offset
    /// subtraction cancels without rounding, so weights are bit-identical.
    #[test]
    fn exact_cost_shift_leaves_weights_bit_identical(
        raw in proptest::collection::vec(0u32..(1 << 20), 2..20),
        exponent in -2i32..30,
    ) {
        let costs: Vec<f64> = raw.iter().map(|&i| f64::from(i) / 16.0).collect();
        let shift = 2f64.powi(exponent);
        let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let a = softmin_weights(&costs, 0.7).unwrap();
        let b = softmin_weights(&shifted, 0.7).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
