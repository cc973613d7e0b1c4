//! Flat key-value experiment configuration files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Unknown and duplicate keys are errors; `trials` and
//! `base_seed` are required. Defaults for the model parameters mirror the
//! standard simulation protocol.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::baseline::{BaselineConfig, CombineRule, StepDecay};
use crate::error::{Error, Result};
use crate::prox::{PenaltyKind, PenaltySpec, Schedule};
use crate::solver::{OmegaMode, SolverConfig};

/// Full experiment description: topology, data, solver, baseline and
/// trial parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    // topology
    pub num_nodes: usize,
    pub area_side: f64,
    pub radius: f64,
    pub degree_min: usize,
    pub degree_max: usize,
    // data
    pub samples_per_node: usize,
    pub num_predictors: usize,
    pub ar_corr: f64,
    pub num_active: usize,
    pub active_value: f64,
    pub noise_std: f64,
    // solver
    pub tau: f64,
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub gamma_mcp: f64,
    pub gamma_scad: f64,
    pub c: f64,
    /// `None` resolves to `sqrt(20) * omega / beta` after omega is known.
    pub d: Option<f64>,
    pub beta: f64,
    /// `None` resolves from the data.
    pub omega: Option<f64>,
    pub max_iterations: usize,
    pub consensus_tol: f64,
    pub stationarity_tol: f64,
    // baseline
    pub baseline_step_c0: f64,
    pub baseline_step_decay: StepDecay,
    pub baseline_max_iterations: Option<usize>,
    // experiment
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub parallel_trials: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_nodes: 30,
            area_side: 2.5,
            radius: 0.8,
            degree_min: 2,
            degree_max: 10,
            samples_per_node: 500,
            num_predictors: 18,
            ar_corr: 0.5,
            num_active: 3,
            active_value: 1.0,
            noise_std: 0.2,
            tau: 0.75,
            penalty: PenaltyKind::Mcp,
            lambda: 0.055,
            gamma_mcp: 2.4,
            gamma_scad: 3.7,
            c: 1.5f64.sqrt(),
            d: None,
            beta: 1.0,
            omega: None,
            max_iterations: 3000,
            consensus_tol: 1e-4,
            stationarity_tol: 1e-4,
            baseline_step_c0: 0.5,
            baseline_step_decay: StepDecay::InvSqrt,
            baseline_max_iterations: None,
            trials: 1,
            base_seed: 0,
            output_dir: PathBuf::from("out"),
            parallel_trials: true,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("key {key}: expected a number, got {value:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("key {key}: value must be finite")));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key {key}: expected a nonnegative integer, got {value:?}")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key {key}: expected an integer seed, got {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "key {key}: expected true or false, got {value:?}"
        ))),
    }
}

impl ExperimentConfig {
    /// Parses the flat key-value format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        let mut have_trials = false;
        let mut have_seed = false;
        for (line_no, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", line_no + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("duplicate key: {key}")));
            }
            match key {
                "num_nodes" => cfg.num_nodes = parse_usize(key, value)?,
                "area_side" => cfg.area_side = parse_f64(key, value)?,
                "radius" => cfg.radius = parse_f64(key, value)?,
                "degree_min" => cfg.degree_min = parse_usize(key, value)?,
                "degree_max" => cfg.degree_max = parse_usize(key, value)?,
                "samples_per_node" => cfg.samples_per_node = parse_usize(key, value)?,
                "num_predictors" => cfg.num_predictors = parse_usize(key, value)?,
                "ar_corr" => cfg.ar_corr = parse_f64(key, value)?,
                "num_active" => cfg.num_active = parse_usize(key, value)?,
                "active_value" => cfg.active_value = parse_f64(key, value)?,
                "noise_std" => cfg.noise_std = parse_f64(key, value)?,
                "tau" => cfg.tau = parse_f64(key, value)?,
                "penalty" => {
                    cfg.penalty = match value {
                        "mcp" => PenaltyKind::Mcp,
                        "scad" => PenaltyKind::Scad,
                        _ => {
                            return Err(Error::Config(format!(
                                "key penalty: expected mcp or scad, got {value:?}"
                            )))
                        }
                    }
                }
                "lambda" => cfg.lambda = parse_f64(key, value)?,
                "gamma_mcp" => cfg.gamma_mcp = parse_f64(key, value)?,
                "gamma_scad" => cfg.gamma_scad = parse_f64(key, value)?,
                "c" => cfg.c = parse_f64(key, value)?,
                "d" => {
                    cfg.d = if value == "auto" {
                        None
                    } else {
                        Some(parse_f64(key, value)?)
                    }
                }
                "beta" => cfg.beta = parse_f64(key, value)?,
                "omega" => {
                    cfg.omega = if value == "auto" {
                        None
                    } else {
                        Some(parse_f64(key, value)?)
                    }
                }
                "max_iterations" => cfg.max_iterations = parse_usize(key, value)?,
                "consensus_tol" => cfg.consensus_tol = parse_f64(key, value)?,
                "stationarity_tol" => cfg.stationarity_tol = parse_f64(key, value)?,
                "baseline_step_c0" => cfg.baseline_step_c0 = parse_f64(key, value)?,
                "baseline_step_decay" => {
                    cfg.baseline_step_decay = match value {
                        "inv_sqrt" => StepDecay::InvSqrt,
                        "inv_k" => StepDecay::InvK,
                        _ => {
                            return Err(Error::Config(format!(
                                "key baseline_step_decay: expected inv_sqrt or inv_k, got {value:?}"
                            )))
                        }
                    }
                }
                "baseline_max_iterations" => {
                    cfg.baseline_max_iterations = Some(parse_usize(key, value)?)
                }
                "trials" => {
                    cfg.trials = parse_usize(key, value)?;
                    have_trials = true;
                }
                "base_seed" => {
                    cfg.base_seed = parse_u64(key, value)?;
                    have_seed = true;
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "parallel_trials" => cfg.parallel_trials = parse_bool(key, value)?,
                _ => return Err(Error::Config(format!("unknown key: {key}"))),
            }
        }
        if !have_trials {
            return Err(Error::Config("missing required key: trials".into()));
        }
        if !have_seed {
            return Err(Error::Config("missing required key: base_seed".into()));
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Validation(format!(
                "tau must lie in (0,1): got {}",
                self.tau
            )));
        }
        if self.num_active > self.num_predictors {
            return Err(Error::Config(
                "num_active cannot exceed num_predictors".into(),
            ));
        }
        if !(self.noise_std > 0.0) {
            return Err(Error::Config("noise_std must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.ar_corr) {
            return Err(Error::Config("ar_corr must lie in [0,1)".into()));
        }
        Ok(())
    }

    /// Penalty spec for the given kind using this config's parameters.
    pub fn penalty_spec(&self, kind: PenaltyKind) -> Result<PenaltySpec> {
        let gamma = match kind {
            PenaltyKind::Mcp => self.gamma_mcp,
            PenaltyKind::Scad => self.gamma_scad,
        };
        PenaltySpec::new(kind, self.lambda, gamma)
    }

    /// Solver configuration for the given penalty kind. `d = auto`
    /// resolves to `sqrt(20) * omega / beta` once omega is known, nudged
    /// up by one ulp if rounding lands below the bound.
    pub fn solver_config(&self, kind: PenaltyKind, omega: f64) -> Result<SolverConfig> {
        let d = match self.d {
            Some(d) => d,
            None => {
                let mut d = 20f64.sqrt() * omega / self.beta;
                while self.beta * d < 20f64.sqrt() * omega {
                    d = d.next_up();
                }
                d
            }
        };
        Ok(SolverConfig {
            tau: self.tau,
            penalty: self.penalty_spec(kind)?,
            schedule: Schedule::new(self.c, d, self.beta)?,
            omega: OmegaMode::Fixed(omega),
            max_iterations: self.max_iterations,
            consensus_tol: self.consensus_tol,
            stationarity_tol: self.stationarity_tol,
            parallel: false,
        })
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            tau: self.tau,
            lambda: self.lambda,
            step_c0: self.baseline_step_c0,
            step_decay: self.baseline_step_decay,
            combine: CombineRule::Metropolis,
            max_iterations: self.baseline_max_iterations.unwrap_or(self.max_iterations),
        }
    }
}
