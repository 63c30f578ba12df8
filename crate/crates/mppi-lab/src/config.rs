//! Run configuration: per-scenario defaults, TOML file round-trip, CLI flag
//! overrides, and the content hash stamped into every artifact.
//!
//! Precedence, lowest to highest: registry defaults for the named scenario,
//! then values from `--config FILE`, then individual command-line flags. The
//! fully resolved configuration is written next to the run's artifacts, so a
//! run can always be replayed from its own output directory.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mppi_core::scenarios;
use mppi_core::MppiConfig64;

use crate::{LabError, LabResult};

/// How a sweep evaluates the smoothed control at each beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Quadrature evaluation of the weighted mean; no Monte Carlo error.
    Exact,
    /// Monte Carlo estimates replicated across the seed list, reported with
    /// standard errors.
    Sampled,
}

impl std::str::FromStr for SweepMode {
    type Err = LabError;
    fn from_str(s: &str) -> LabResult<Self> {
        match s {
            "exact" => Ok(SweepMode::Exact),
            "sampled" => Ok(SweepMode::Sampled),
            other => Err(LabError::Usage(format!(
                "unknown sweep mode '{other}'; expected 'exact' or 'sampled'"
            ))),
        }
    }
}

/// Which problem to run and its two free parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    /// Base temperature; the instance temperature is lambda0 * sigma0.
    pub lambda0: f64,
    /// Base per-step noise covariance scale.
    pub sigma0: f64,
}

/// Solver settings for the shrinking iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub samples: usize,
    pub iterations: usize,
    pub shrink_factor: f64,
    pub seed: u64,
}

/// Reference-oracle search and quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub det_points: usize,
    pub det_rounds: usize,
    pub ols_points: usize,
    pub ols_quadrature: usize,
    pub cls_quadrature: usize,
    /// Search cube bounds, shared by every control axis.
    pub box_lo: f64,
    pub box_hi: f64,
}

/// Sweep settings shared by `bias-sweep` and `pdf-curve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Empty means "use the command's default list".
    pub beta_list: Vec<f64>,
    pub mode: SweepMode,
    /// Replicate seeds for sampled sweeps.
    pub seed_list: Vec<u64>,
}

/// Complete, self-contained description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub solver: SolverSection,
    pub oracle: OracleSection,
    pub sweep: SweepSection,
}

/// Optional per-flag overrides collected from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub iterations: Option<usize>,
    pub shrink_factor: Option<f64>,
    pub lambda0: Option<f64>,
    pub sigma0: Option<f64>,
    pub seed: Option<u64>,
    pub beta_list: Option<Vec<f64>>,
    pub mode: Option<SweepMode>,
}

impl RunConfig {
    /// Registry defaults for a scenario; errors list the registered names.
    pub fn for_scenario(name: &str) -> LabResult<Self> {
        let mppi: MppiConfig64 = scenarios::default_config(name)?;
        let ora = scenarios::oracle_defaults::<f64>(name)?;
        Ok(Self {
            scenario: ScenarioSection {
                name: name.to_string(),
                lambda0: 1.0,
                sigma0: 1.0,
            },
            solver: SolverSection {
                samples: mppi.samples,
                iterations: mppi.iterations,
                shrink_factor: mppi.shrink_factor,
                seed: mppi.seed,
            },
            oracle: OracleSection {
                det_points: ora.det_points,
                det_rounds: ora.det_rounds,
                ols_points: ora.ols_points,
                ols_quadrature: ora.ols_quadrature,
                cls_quadrature: ora.cls_quadrature,
                box_lo: ora.search_box.lo[0],
                box_hi: ora.search_box.hi[0],
            },
            sweep: SweepSection {
                beta_list: Vec::new(),
                mode: SweepMode::Exact,
                seed_list: (1..=8).collect(),
            },
        })
    }

    /// Parses a complete config; unknown keys anywhere are rejected.
    pub fn from_toml(text: &str) -> LabResult<Self> {
        toml::from_str(text).map_err(|e| LabError::Usage(format!("config file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("static config schema serializes")
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            LabError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml(&text)
    }

    /// First 16 hex digits of the SHA-256 of the serialized form; stamped
    /// into every CSV comment line and run record.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Solver settings in core form; the initial control is always zero.
    pub fn to_mppi(&self) -> LabResult<MppiConfig64> {
        let base: MppiConfig64 = scenarios::default_config(&self.scenario.name)?;
        Ok(MppiConfig64 {
            samples: self.solver.samples,
            iterations: self.solver.iterations,
            shrink_factor: self.solver.shrink_factor,
            lambda0: self.scenario.lambda0,
            init_control: vec![0.0; base.init_control.len()],
            seed: self.solver.seed,
        })
    }

    /// Applies command-line flags on top; flags always win.
    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(v) = ov.samples {
            self.solver.samples = v;
        }
        if let Some(v) = ov.iterations {
            self.solver.iterations = v;
        }
        if let Some(v) = ov.shrink_factor {
            self.solver.shrink_factor = v;
        }
        if let Some(v) = ov.lambda0 {
            self.scenario.lambda0 = v;
        }
        if let Some(v) = ov.sigma0 {
            self.scenario.sigma0 = v;
        }
        if let Some(v) = ov.seed {
            self.solver.seed = v;
        }
        if let Some(v) = &ov.beta_list {
            self.sweep.beta_list = v.clone();
        }
        if let Some(v) = ov.mode {
            self.sweep.mode = v;
        }
    }
}

/// Builds the effective configuration for one invocation: scenario defaults,
/// optionally replaced by a config file, then flag overrides.
pub fn resolve(name: &str, file: Option<&Path>, ov: &Overrides) -> LabResult<RunConfig> {
    // Validate the name against the registry first so typos die with the
    // listing even when a config file is supplied.
    scenarios::default_config::<f64>(name)?;
    let mut cfg = match file {
        None => RunConfig::for_scenario(name)?,
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            if cfg.scenario.name != name {
                return Err(LabError::Usage(format!(
                    "config file {} is for scenario '{}' but '{}' was requested",
                    path.display(),
                    cfg.scenario.name,
                    name
                )));
            }
            cfg
        }
    };
    cfg.apply(ov);
    Ok(cfg)
}

/// Parses a comma-separated list of strictly positive betas.
pub fn parse_beta_list(s: &str) -> LabResult<Vec<f64>> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| LabError::Usage(format!("bad value '{tok}' in --beta-list")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(LabError::Usage(format!(
                "beta values must be finite and positive, got {tok}"
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(LabError::Usage(
            "--beta-list needs at least one positive value".to_string(),
        ));
    }
    Ok(out)
}
