//! The five operations behind the `mppi-lab` binary. Each resolves its data
//! from the core crate, writes artifacts under the output directory, and
//! returns the run record; checks are reported as verdicts, never silently
//! dropped.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use mppi_core::oracles::{
    cls_ocp_oracle, det_ocp_oracle, gibbs_mean, ols_ocp_oracle, optimal_density_curve, slope_fit,
    DpParams, GibbsParams, SearchBox,
};
use mppi_core::scenarios;
use mppi_core::{
    deterministic_mppi_solve, iteration_seed, standard_mppi_step, value_of, ControlWeight,
    CostModel, CovarianceSpec64, DynamicsModel, OcpInstance64, OracleSolution64, SymMat64,
};
use sha2::{Digest, Sha256};

use crate::acceptance::{self, AcceptanceOptions, CriterionReport};
use crate::config::{RunConfig, SweepMode};
use crate::csv_out::{fmt_f64, write_csv};
use crate::plots;
use crate::runrec::{RunRecord, Verdict};
use crate::{LabError, LabResult};

/// Record plus its on-disk location, for callers that want the verdicts
/// without re-reading the JSON.
pub struct CommandReport {
    pub record: RunRecord,
    pub record_path: PathBuf,
}

/// Euclidean distance between two control trajectories.
pub fn l2_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sample mean and standard error of the mean (n-1 variance denominator).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Eight log-spaced betas over [0.02, 0.2], the default sweep range.
pub fn default_bias_betas() -> Vec<f64> {
    (0..8).map(|k| 0.02 * 10f64.powf(k as f64 / 7.0)).collect()
}

fn cmdline() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn build(cfg: &RunConfig) -> LabResult<OcpInstance64> {
    Ok(scenarios::build_instance(
        &cfg.scenario.name,
        cfg.scenario.lambda0,
        cfg.scenario.sigma0,
    )?)
}

fn det_oracle(cfg: &RunConfig, inst: &OcpInstance64) -> LabResult<OracleSolution64> {
    let search = SearchBox::cube(inst.control_dim(), cfg.oracle.box_lo, cfg.oracle.box_hi);
    Ok(det_ocp_oracle(
        inst,
        &search,
        cfg.oracle.det_points,
        cfg.oracle.det_rounds,
    )?)
}

/// Collects artifact names as they are written so the record can list them
/// all; every command funnels its output through one of these.
struct Emitter<'a> {
    dir: &'a Path,
    hash: String,
    seed: u64,
    outputs: Vec<String>,
    started: Instant,
}

impl<'a> Emitter<'a> {
    fn new(dir: &'a Path, cfg: &RunConfig) -> LabResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir,
            hash: cfg.hash(),
            seed: cfg.solver.seed,
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> LabResult<()> {
        let cols: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&self.dir.join(name), &self.hash, self.seed, &cols, rows)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, content: &str) -> LabResult<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn config_copy(&mut self, stem: &str, cfg: &RunConfig) -> LabResult<()> {
        self.text(&format!("{stem}_config.toml"), &cfg.to_toml())
    }

    fn finish(
        self,
        command: &str,
        scenario: &str,
        verdicts: Vec<Verdict>,
        stem: &str,
    ) -> LabResult<CommandReport> {
        let mut record = RunRecord {
            scenario: scenario.to_string(),
            command: cmdline(),
            config_hash: self.hash,
            seed: self.seed,
            outputs: self.outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            verdicts,
        };
        let _ = command;
        let record_path = record.write(self.dir, stem)?;
        Ok(CommandReport {
            record,
            record_path,
        })
    }
}

fn header_with_controls(prefix: &[&str], dim: usize, suffix: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for c in 0..dim {
        h.push(format!("u{c}"));
    }
    h.extend(suffix.iter().map(|s| s.to_string()));
    h
}

/// Runs the shrinking solver and tabulates every iterate against the
/// deterministic reference: iteration, beta, controls, noise-free value, and
/// distance to the reference minimizer.
pub fn cmd_solve(cfg: &RunConfig, out_dir: &Path) -> LabResult<CommandReport> {
    let name = cfg.scenario.name.clone();
    let inst = build(cfg)?;
    let det = det_oracle(cfg, &inst)?;
    let report = deterministic_mppi_solve(&inst, &cfg.to_mppi()?)?;
    let dim = inst.control_dim();

    let header = header_with_controls(&["iteration", "beta"], dim, &["value", "det_error"]);
    let mut rows = Vec::with_capacity(report.history.len());
    for rec in &report.history {
        let mut row = vec![rec.iteration.to_string(), fmt_f64(rec.beta)];
        for c in 0..dim {
            row.push(fmt_f64(rec.control[c]));
        }
        row.push(fmt_f64(value_of(&inst, &rec.control)?));
        row.push(fmt_f64(l2_err(&rec.control, &det.minimizer)));
        rows.push(row);
    }

    let stem = format!("solve_{name}");
    let mut em = Emitter::new(out_dir, cfg)?;
    em.config_copy(&stem, cfg)?;
    em.csv(&format!("{stem}.csv"), &header, &rows)?;

    let final_err = l2_err(&report.solution, &det.minimizer);
    println!(
        "solve {name}: {} iterations, value {}, error vs reference {}",
        report.history.len(),
        fmt_f64(report.value),
        fmt_f64(final_err)
    );
    em.finish("solve", &name, Vec::new(), &stem)
}

/// One sweep point: reference distances of the smoothed control at one beta,
/// with standard errors when estimated by sampling.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub beta: f64,
    pub control_error: f64,
    pub value_gap: f64,
    pub control_se: f64,
    pub value_se: f64,
}

/// Quadrature sweep: the exact weighted mean at each beta, no sampling error.
pub fn exact_sweep(
    inst: &OcpInstance64,
    det: &OracleSolution64,
    betas: &[f64],
    lambda0: f64,
) -> LabResult<Vec<SweepRow>> {
    let params = GibbsParams::for_dim(inst.control_dim());
    betas
        .iter()
        .map(|&beta| {
            let mean = gibbs_mean(inst, beta, lambda0, &params)?;
            Ok(SweepRow {
                beta,
                control_error: l2_err(&mean, &det.minimizer),
                value_gap: value_of(inst, &mean)? - det.value,
                control_se: 0.0,
                value_se: 0.0,
            })
        })
        .collect()
}

/// Monte Carlo sweep anchored at the reference minimizer, replicated across
/// seeds; each replicate gets an independent stream per beta.
pub fn sampled_sweep(
    inst: &OcpInstance64,
    det: &OracleSolution64,
    betas: &[f64],
    lambda0: f64,
    samples: usize,
    seeds: &[u64],
) -> LabResult<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(LabError::Usage(
            "sampled sweeps need a non-empty seed_list".to_string(),
        ));
    }
    let base = inst.sigma.scale();
    betas
        .iter()
        .enumerate()
        .map(|(k, &beta)| {
            let cov = inst.sigma.with_scale(beta * beta * base)?;
            let lambda = beta * beta * lambda0;
            let mut errs = Vec::with_capacity(seeds.len());
            let mut gaps = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let step = standard_mppi_step(
                    inst,
                    &det.minimizer,
                    &cov,
                    lambda,
                    samples,
                    iteration_seed(seed, k),
                )?;
                errs.push(l2_err(&step.control, &det.minimizer));
                gaps.push(value_of(inst, &step.control)? - det.value);
            }
            let (err_mean, err_se) = mean_se(&errs);
            let (gap_mean, gap_se) = mean_se(&gaps);
            Ok(SweepRow {
                beta,
                control_error: err_mean,
                value_gap: gap_mean,
                control_se: err_se,
                value_se: gap_se,
            })
        })
        .collect()
}

/// Sweeps beta and tabulates how far the smoothed control sits from the
/// deterministic reference, fitting log-log orders when enough points exist.
pub fn cmd_bias_sweep(cfg: &RunConfig, out_dir: &Path) -> LabResult<CommandReport> {
    let name = cfg.scenario.name.clone();
    let inst = build(cfg)?;
    let det = det_oracle(cfg, &inst)?;
    let betas = if cfg.sweep.beta_list.is_empty() {
        default_bias_betas()
    } else {
        cfg.sweep.beta_list.clone()
    };
    let mode = cfg.sweep.mode;
    let rows = match mode {
        SweepMode::Exact => exact_sweep(&inst, &det, &betas, cfg.scenario.lambda0)?,
        SweepMode::Sampled => sampled_sweep(
            &inst,
            &det,
            &betas,
            cfg.scenario.lambda0,
            cfg.solver.samples,
            &cfg.sweep.seed_list,
        )?,
    };

    let mode_name = match mode {
        SweepMode::Exact => "exact",
        SweepMode::Sampled => "sampled",
    };
    let mut header = vec![
        "beta".to_string(),
        "control_error".to_string(),
        "value_gap".to_string(),
    ];
    if mode == SweepMode::Sampled {
        header.push("control_se".to_string());
        header.push("value_se".to_string());
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![
                fmt_f64(r.beta),
                fmt_f64(r.control_error),
                fmt_f64(r.value_gap),
            ];
            if mode == SweepMode::Sampled {
                row.push(fmt_f64(r.control_se));
                row.push(fmt_f64(r.value_se));
            }
            row
        })
        .collect();

    let mut verdicts = Vec::new();
    if rows.len() >= 4 {
        let lo = betas.iter().cloned().fold(f64::INFINITY, f64::min) * 0.999;
        let hi = betas.iter().cloned().fold(0.0, f64::max) * 1.001;
        let ctrl: Vec<(f64, f64)> = rows.iter().map(|r| (r.beta, r.control_error)).collect();
        let gap: Vec<(f64, f64)> = rows.iter().map(|r| (r.beta, r.value_gap)).collect();
        for (label, points) in [("control-slope-fit", ctrl), ("value-slope-fit", gap)] {
            let fit = slope_fit(&points, (lo, hi))?;
            let detail = format!(
                "fitted order {:.4} from {} points ({} excluded)",
                fit.slope, fit.used, fit.excluded
            );
            println!("bias-sweep {name} [{mode_name}] {label}: {detail}");
            verdicts.push(Verdict {
                name: label.to_string(),
                passed: true,
                detail,
            });
        }
    } else {
        println!("bias-sweep {name} [{mode_name}]: {} points, slope fit needs at least 4", rows.len());
    }

    let stem = format!("bias_{name}_{mode_name}");
    let csv_name = format!("{stem}.csv");
    let mut em = Emitter::new(out_dir, cfg)?;
    em.config_copy(&stem, cfg)?;
    em.csv(&csv_name, &header, &table)?;
    em.text(
        &format!("plot_{stem}.py"),
        &plots::sweep_script(&name, &csv_name, mode == SweepMode::Sampled),
    )?;
    em.finish("bias-sweep", &name, verdicts, &stem)
}

const DENSITY_GRID_POINTS: usize = 1601;

/// Writes one normalized density curve per beta over the scenario's search
/// interval, checks each integrates to one, and emits a plot script.
pub fn cmd_pdf_curve(cfg: &RunConfig, out_dir: &Path) -> LabResult<CommandReport> {
    let name = cfg.scenario.name.clone();
    let inst = build(cfg)?;
    if inst.control_dim() != 1 {
        return Err(LabError::Usage(format!(
            "pdf-curve needs a scalar control trajectory; scenario '{name}' has dimension {}",
            inst.control_dim()
        )));
    }
    let betas = if cfg.sweep.beta_list.is_empty() {
        vec![1.0, 0.5, 0.25, 0.1]
    } else {
        cfg.sweep.beta_list.clone()
    };
    let (lo, hi) = (cfg.oracle.box_lo, cfg.oracle.box_hi);
    let h = (hi - lo) / (DENSITY_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..DENSITY_GRID_POINTS).map(|i| lo + h * i as f64).collect();

    let stem = format!("pdf_{name}");
    let mut em = Emitter::new(out_dir, cfg)?;
    em.config_copy(&stem, cfg)?;

    let header = vec!["beta".to_string(), "w".to_string(), "density".to_string()];
    let mut curve_files = Vec::new();
    let mut verdicts = Vec::new();
    for (i, &beta) in betas.iter().enumerate() {
        let curve = optimal_density_curve(&inst, beta, cfg.scenario.lambda0, &grid)?;
        let rows: Vec<Vec<String>> = curve
            .iter()
            .map(|&(w, q)| vec![fmt_f64(beta), fmt_f64(w), fmt_f64(q)])
            .collect();
        let file = format!("{stem}_b{i}.csv");
        em.csv(&file, &header, &rows)?;
        let mut mass = 0.0;
        for pair in curve.windows(2) {
            mass += 0.5 * (pair[0].1 + pair[1].1) * (pair[1].0 - pair[0].0);
        }
        let ok = (mass - 1.0).abs() <= 1e-6;
        let detail = format!("beta {beta}: grid mass {mass:.9} (tolerance 1e-6 around 1)");
        println!("pdf-curve {name} normalization-b{i}: {detail}");
        verdicts.push(Verdict {
            name: format!("normalization-b{i}"),
            passed: ok,
            detail,
        });
        curve_files.push((beta, file));
    }
    em.text(
        &format!("plot_{stem}.py"),
        &plots::density_script(&name, &curve_files),
    )?;
    em.finish("pdf-curve", &name, verdicts, &stem)
}

/// Deterministic, open-loop stochastic, and closed-loop first controls of a
/// two-step check problem with an even terminal cost, an even noise law, and
/// a centered start; all three must vanish by symmetry.
pub fn symmetric_degeneracy() -> LabResult<(f64, f64, f64)> {
    type Map = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
    let identity: Map = Arc::new(|x: &[f64], out: &mut [f64]| out.copy_from_slice(x));
    let ones: Map = Arc::new(|_x: &[f64], out: &mut [f64]| out.fill(1.0));
    let dynamics = DynamicsModel::input_affine(1, 1, 1, identity, ones.clone(), ones);
    let cost = CostModel::new(
        Arc::new(|_x: &[f64]| 0.0),
        ControlWeight::Constant(SymMat64::identity(1)),
        Arc::new(|x: &[f64]| x[0].powi(6)),
    );
    let inst = OcpInstance64::new(
        dynamics,
        cost,
        2,
        vec![0.0],
        CovarianceSpec64::new(SymMat64::identity(1), 2, 1.0)?,
        1.0,
    )?;
    let search = SearchBox::cube(2, -2.0, 2.0);
    let det = det_ocp_oracle(&inst, &search, 201, 30)?;
    let ols = ols_ocp_oracle(&inst, 20, &search, 21, 30)?;
    let cls = cls_ocp_oracle(&inst, 20, &DpParams::default())?;
    Ok((det.minimizer[0], ols.minimizer[0], cls.minimizer[0]))
}

/// Runs every solver and oracle on one two-step scalar scenario: reference
/// points, the closed-loop policy curve, the shrinking iterate path, and a
/// single full-covariance sampled point, with measured-agreement verdicts.
pub fn cmd_compare(cfg: &RunConfig, out_dir: &Path) -> LabResult<CommandReport> {
    let name = cfg.scenario.name.clone();
    let inst = build(cfg)?;
    if inst.horizon != 2 || inst.dynamics.n_u != 1 || inst.dynamics.n_x != 1 {
        return Err(LabError::Usage(format!(
            "compare needs a two-step scalar scenario; '{name}' is not one"
        )));
    }
    let det = det_oracle(cfg, &inst)?;
    let search = SearchBox::cube(inst.control_dim(), cfg.oracle.box_lo, cfg.oracle.box_hi);
    let ols = ols_ocp_oracle(
        &inst,
        cfg.oracle.ols_quadrature,
        &search,
        cfg.oracle.ols_points,
        cfg.oracle.det_rounds,
    )?;
    let cls = cls_ocp_oracle(&inst, cfg.oracle.cls_quadrature, &DpParams::default())?;

    // Single-shot sampled point: one iteration at full covariance.
    let mut single = cfg.to_mppi()?;
    single.iterations = 1;
    let standard = deterministic_mppi_solve(&inst, &single)?;
    let shrinking = deterministic_mppi_solve(&inst, &cfg.to_mppi()?)?;

    let stem = format!("compare_{name}");
    let mut em = Emitter::new(out_dir, cfg)?;
    em.config_copy(&stem, cfg)?;

    let points_header: Vec<String> = ["kind", "u0", "u1"].iter().map(|s| s.to_string()).collect();
    let point_rows = vec![
        vec![
            "det".to_string(),
            fmt_f64(det.minimizer[0]),
            fmt_f64(det.minimizer[1]),
        ],
        vec![
            "ols".to_string(),
            fmt_f64(ols.minimizer[0]),
            fmt_f64(ols.minimizer[1]),
        ],
        // The closed-loop reference fixes only the first control; the second
        // is a policy, tabulated in the companion file.
        vec!["cls".to_string(), fmt_f64(cls.minimizer[0]), "nan".to_string()],
        vec![
            "mppi_standard".to_string(),
            fmt_f64(standard.solution[0]),
            fmt_f64(standard.solution[1]),
        ],
        vec![
            "mppi_det".to_string(),
            fmt_f64(shrinking.solution[0]),
            fmt_f64(shrinking.solution[1]),
        ],
    ];
    let points_name = format!("{stem}_points.csv");
    em.csv(&points_name, &points_header, &point_rows)?;

    let policy_header: Vec<String> = ["x1", "u1"].iter().map(|s| s.to_string()).collect();
    let policy_rows: Vec<Vec<String>> = cls
        .policy
        .iter()
        .map(|&(x, u)| vec![fmt_f64(x), fmt_f64(u)])
        .collect();
    let policy_name = format!("{stem}_policy.csv");
    em.csv(&policy_name, &policy_header, &policy_rows)?;

    let iter_header = header_with_controls(&["iteration", "beta"], 2, &["value"]);
    let iter_rows: Vec<Vec<String>> = shrinking
        .history
        .iter()
        .map(|rec| {
            Ok(vec![
                rec.iteration.to_string(),
                fmt_f64(rec.beta),
                fmt_f64(rec.control[0]),
                fmt_f64(rec.control[1]),
                fmt_f64(value_of(&inst, &rec.control)?),
            ])
        })
        .collect::<LabResult<_>>()?;
    let iter_name = format!("{stem}_iterates.csv");
    em.csv(&iter_name, &iter_header, &iter_rows)?;

    em.text(
        &format!("plot_{stem}.py"),
        &plots::compare_script(&name, &points_name, &policy_name, &iter_name),
    )?;

    // Verdicts report measured agreement; a gap beyond its band is recorded,
    // not rounded away.
    let se0 = standard.history[0].update_se[0];
    let gap = (standard.solution[0] - cls.minimizer[0]).abs();
    let band = 3.0 * (se0 + cls.certified_tol);
    let endpoint = l2_err(&shrinking.solution, &det.minimizer);
    let (sym_det, sym_ols, sym_cls) = symmetric_degeneracy()?;
    let sym_worst = sym_det.abs().max(sym_ols.abs()).max(sym_cls.abs());
    let verdicts = vec![
        Verdict {
            name: "standard-vs-closed-loop".to_string(),
            passed: gap <= band,
            detail: format!(
                "single-step sampled u0 {} (SE {}) vs closed-loop reference u0 {} (certified {}): gap {}, 3-sigma band {}",
                fmt_f64(standard.solution[0]),
                fmt_f64(se0),
                fmt_f64(cls.minimizer[0]),
                fmt_f64(cls.certified_tol),
                fmt_f64(gap),
                fmt_f64(band)
            ),
        },
        Verdict {
            name: "endpoint-vs-reference".to_string(),
            passed: endpoint <= 1e-2,
            detail: format!(
                "shrinking solve endpoint within {} of the deterministic reference (tolerance 1e-2)",
                fmt_f64(endpoint)
            ),
        },
        Verdict {
            name: "symmetric-degeneracy".to_string(),
            passed: sym_worst <= 1e-6,
            detail: format!(
                "even check problem first controls: det {}, ols {}, cls {} (all within 1e-6 of 0)",
                fmt_f64(sym_det),
                fmt_f64(sym_ols),
                fmt_f64(sym_cls)
            ),
        },
    ];
    for v in &verdicts {
        println!(
            "compare {name} {}: {} ({})",
            v.name,
            if v.passed { "ok" } else { "DEVIATES" },
            v.detail
        );
    }
    em.finish("compare", &name, verdicts, &stem)
}

/// Runs the acceptance suite, prints one line per criterion, and writes the
/// report plus a run record. The caller decides the exit code from the
/// number of failures.
pub fn cmd_accept(out_dir: &Path, only: &[String]) -> LabResult<Vec<CriterionReport>> {
    let started = Instant::now();
    let opts = AcceptanceOptions {
        only: only.to_vec(),
        ..AcceptanceOptions::default()
    };
    let reports = acceptance::run_all(&opts)?;
    for r in &reports {
        println!(
            "[{}] {} ({:.1} s): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.runtime_s,
            r.detail
        );
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("acceptance: {passed} of {} criteria passed", reports.len());

    std::fs::create_dir_all(out_dir)?;
    let mut json = serde_json::to_string_pretty(&reports).expect("static schema serializes");
    json.push('\n');
    std::fs::write(out_dir.join("acceptance_report.json"), json)?;

    let digest = Sha256::digest(format!("accept only={only:?} c3={}", opts.c3).as_bytes());
    let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    let mut record = RunRecord {
        scenario: "acceptance".to_string(),
        command: cmdline(),
        config_hash: hash,
        seed: 0,
        outputs: vec!["acceptance_report.json".to_string()],
        wall_time_s: started.elapsed().as_secs_f64(),
        verdicts: reports
            .iter()
            .map(|r| Verdict {
                name: r.name.to_string(),
                passed: r.passed,
                detail: r.detail.clone(),
            })
            .collect(),
    };
    record.write(out_dir, "acceptance")?;
    Ok(reports)
}
