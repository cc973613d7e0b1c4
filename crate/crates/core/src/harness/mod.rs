//! Experiment orchestration: seeded multi-trial dataset generation,
//! algorithm runs with per-iteration metrics, three-way comparisons with
//! CSV and SVG outputs, and configuration validation.

pub mod config;
pub mod svg;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array1;
use rayon::prelude::*;

pub use config::ExperimentConfig;

use crate::baseline::run_baseline_with;
use crate::error::{Error, Result};
use crate::metrics;
use crate::prox::PenaltyKind;
use crate::solver::{
    compute_omega, run_with, validate_config, IterationRecord, Termination, ValidationReport,
};
use crate::synth::{gen_design, gen_node_data, sparse_truth, GroundTruth, NodeData};
use crate::topology::Graph;

/// Algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    DsadMcp,
    DsadScad,
    Baseline,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::DsadMcp => "dsad_mcp",
            Algorithm::DsadScad => "dsad_scad",
            Algorithm::Baseline => "baseline",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "dsad_mcp" => Ok(Algorithm::DsadMcp),
            "dsad_scad" => Ok(Algorithm::DsadScad),
            "baseline" => Ok(Algorithm::Baseline),
            _ => Err(Error::Config(format!(
                "unknown algorithm {name:?}; expected dsad_mcp, dsad_scad or baseline"
            ))),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for one role within one trial: the base seed, the
/// trial index and every byte of the role tag are folded through a
/// splitmix64 chain, so distinct roles never share a stream. Per-node
/// seeds are formed by adding the node index to the derived role seed.
pub fn derive_seed(base: u64, trial: u64, role: &str) -> u64 {
    let mut h = splitmix64(base ^ 0xD6E8_FEB8_6659_FD93);
    h = splitmix64(h ^ trial.wrapping_mul(0xA24B_AED4_963E_E407));
    for b in role.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h
}

/// Everything one trial runs on.
pub struct TrialInputs {
    pub graph: Graph,
    pub truth: GroundTruth,
    pub data: Vec<NodeData>,
    pub seed_topology: u64,
    pub seed_support: u64,
    pub seed_design_base: u64,
    pub seed_noise_base: u64,
}

/// Builds the graph, truth and per-node data for one trial from the
/// config's base seed. Deterministic; `generate` and `run` rebuild
/// identical inputs from the same config.
pub fn build_trial(cfg: &ExperimentConfig, trial: u64) -> Result<TrialInputs> {
    let seed_topology = derive_seed(cfg.base_seed, trial, "topology");
    let seed_support = derive_seed(cfg.base_seed, trial, "support");
    let seed_design_base = derive_seed(cfg.base_seed, trial, "design");
    let seed_noise_base = derive_seed(cfg.base_seed, trial, "noise");

    let graph = if cfg.num_nodes == 1 {
        Graph::singleton()
    } else {
        Graph::random_geometric(
            cfg.num_nodes,
            cfg.area_side,
            cfg.radius,
            cfg.degree_min,
            cfg.degree_max,
            seed_topology,
        )?
    };
    let truth = sparse_truth(
        cfg.num_predictors,
        cfg.num_active,
        cfg.active_value,
        cfg.noise_std,
        seed_support,
    )?;
    let mut data = Vec::with_capacity(cfg.num_nodes);
    for l in 0..cfg.num_nodes as u64 {
        let design = gen_design(
            cfg.samples_per_node,
            cfg.num_predictors,
            cfg.ar_corr,
            seed_design_base.wrapping_add(l),
        )?;
        data.push(gen_node_data(
            &design,
            &truth,
            seed_noise_base.wrapping_add(l),
        )?);
    }
    Ok(TrialInputs {
        graph,
        truth,
        data,
        seed_topology,
        seed_support,
        seed_design_base,
        seed_noise_base,
    })
}

fn fmt_exact(v: f64) -> String {
    format!("{v:e}")
}

/// Per-iteration metric values alongside the solver record.
pub struct TrialCurves {
    pub records: Vec<IterationRecord>,
    pub mse: Vec<f64>,
    pub network_mse: Vec<f64>,
    pub recognition: Vec<f64>,
}

/// Result of one algorithm run on one trial.
pub struct TrialRun {
    pub curves: TrialCurves,
    pub final_w: Vec<Array1<f64>>,
    pub termination: String,
    pub coverage_gap: f64,
}

/// Runs one algorithm on prepared trial inputs, collecting per-iteration
/// estimation metrics (activity threshold zero).
pub fn run_trial(
    cfg: &ExperimentConfig,
    alg: Algorithm,
    inputs: &TrialInputs,
) -> Result<TrialRun> {
    let truth_w = inputs.truth.augmented_w(cfg.tau)?;
    let support = inputs.truth.active_set();
    let p = cfg.num_predictors;

    let mut mse_curve = Vec::new();
    let mut net_curve = Vec::new();
    let mut recog_curve = Vec::new();
    let mut track = |w: &[Array1<f64>]| {
        mse_curve.push(metrics::mse(w, &truth_w).unwrap_or(f64::NAN));
        net_curve.push(metrics::network_mse(w).unwrap_or(f64::NAN));
        recog_curve
            .push(metrics::recognition_accuracy(w, support, p, 0.0).unwrap_or(f64::NAN));
    };

    let (records, final_w, termination) = match alg {
        Algorithm::DsadMcp | Algorithm::DsadScad => {
            let kind = if alg == Algorithm::DsadMcp {
                PenaltyKind::Mcp
            } else {
                PenaltyKind::Scad
            };
            let m_max = inputs
                .data
                .iter()
                .map(NodeData::num_samples)
                .max()
                .unwrap_or(0);
            let omega = match cfg.omega {
                Some(v) => v,
                None => compute_omega(&inputs.data, cfg.tau, cfg.lambda, m_max)?,
            };
            let solver_cfg = cfg.solver_config(kind, omega)?;
            let outcome = run_with(&solver_cfg, &inputs.data, &inputs.graph, |state, _| {
                track(&state.w)
            })?;
            (
                outcome.records,
                outcome.state.w,
                match outcome.termination {
                    Termination::Budget => "budget".to_string(),
                    Termination::Tolerance => "tolerance".to_string(),
                },
            )
        }
        Algorithm::Baseline => {
            let baseline_cfg = cfg.baseline_config();
            let outcome =
                run_baseline_with(&baseline_cfg, &inputs.data, &inputs.graph, |w, _| track(w))?;
            (outcome.records, outcome.w, "budget".to_string())
        }
    };

    let mut mean = Array1::<f64>::zeros(p + 1);
    for w in &final_w {
        mean += w;
    }
    mean /= final_w.len() as f64;
    let coverage_gap = metrics::quantile_coverage_gap(&inputs.data, &mean, cfg.tau)?;

    Ok(TrialRun {
        curves: TrialCurves {
            records,
            mse: mse_curve,
            network_mse: net_curve,
            recognition: recog_curve,
        },
        final_w,
        termination,
        coverage_gap,
    })
}

fn write_trial_iterations(path: &Path, run: &TrialRun) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "k,objective,aug_lagrangian,primal_residual,consensus_residual,stationarity_residual,w_step,mse,network_mse,recognition_accuracy"
    )?;
    for (i, r) in run.curves.records.iter().enumerate() {
        let st = r.stationarity_residual.map(fmt_exact).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_exact(r.objective),
            fmt_exact(r.aug_lagrangian),
            fmt_exact(r.primal_residual),
            fmt_exact(r.consensus_residual),
            st,
            fmt_exact(r.w_step),
            fmt_exact(run.curves.mse[i]),
            fmt_exact(run.curves.network_mse[i]),
            fmt_exact(run.curves.recognition[i]),
        )?;
    }
    Ok(())
}

/// Per-trial summary plus the across-trial mean row.
fn write_summary(path: &Path, rows: &[(usize, &TrialRun)]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "trial,iterations,termination,mse,network_mse,recognition_accuracy,coverage_gap"
    )?;
    let mut sums = [0.0f64; 5];
    for &(trial, run) in rows {
        let iters = run.curves.records.len();
        let last = run.curves.records.len().saturating_sub(1);
        let (mse, net, rec) = if run.curves.mse.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                run.curves.mse[last],
                run.curves.network_mse[last],
                run.curves.recognition[last],
            )
        };
        writeln!(
            w,
            "{trial},{iters},{},{},{},{},{}",
            run.termination,
            fmt_exact(mse),
            fmt_exact(net),
            fmt_exact(rec),
            fmt_exact(run.coverage_gap)
        )?;
        sums[0] += iters as f64;
        sums[1] += mse;
        sums[2] += net;
        sums[3] += rec;
        sums[4] += run.coverage_gap;
    }
    let n = rows.len() as f64;
    writeln!(
        w,
        "mean,{},,{},{},{},{}",
        fmt_exact(sums[0] / n),
        fmt_exact(sums[1] / n),
        fmt_exact(sums[2] / n),
        fmt_exact(sums[3] / n),
        fmt_exact(sums[4] / n)
    )?;
    Ok(())
}

fn build_all_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialInputs>> {
    if cfg.parallel_trials {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| build_trial(cfg, t))
            .collect()
    } else {
        (0..cfg.trials as u64).map(|t| build_trial(cfg, t)).collect()
    }
}

fn run_all_trials(
    cfg: &ExperimentConfig,
    alg: Algorithm,
    inputs: &[TrialInputs],
) -> Result<Vec<TrialRun>> {
    if cfg.parallel_trials {
        inputs
            .par_iter()
            .map(|inp| run_trial(cfg, alg, inp))
            .collect()
    } else {
        inputs.iter().map(|inp| run_trial(cfg, alg, inp)).collect()
    }
}

/// Writes the per-trial dataset files: graph edge list, one CSV per node,
/// and a manifest recording dimensions, truth and all seeds. Byte-stable
/// for a fixed config.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<()> {
    let inputs = build_all_trials(cfg)?;
    for (t, inp) in inputs.iter().enumerate() {
        let dir = cfg.output_dir.join(format!("trial_{t:03}"));
        fs::create_dir_all(&dir)?;
        let mut gw = BufWriter::new(fs::File::create(dir.join("graph.txt"))?);
        inp.graph.write_edge_list(&mut gw)?;
        for (l, node) in inp.data.iter().enumerate() {
            let mut nw = BufWriter::new(fs::File::create(dir.join(format!("node_{l:03}.csv")))?);
            node.write_csv(&mut nw)?;
        }
        let mut mw = BufWriter::new(fs::File::create(dir.join("manifest.txt"))?);
        write_manifest(&mut mw, cfg, t as u64, inp)?;
    }
    Ok(())
}

fn write_manifest(
    w: &mut impl Write,
    cfg: &ExperimentConfig,
    trial: u64,
    inp: &TrialInputs,
) -> Result<()> {
    writeln!(w, "trial = {trial}")?;
    writeln!(w, "base_seed = {}", cfg.base_seed)?;
    writeln!(w, "num_nodes = {}", cfg.num_nodes)?;
    writeln!(w, "num_predictors = {}", cfg.num_predictors)?;
    let m: Vec<String> = inp
        .data
        .iter()
        .map(|d| d.num_samples().to_string())
        .collect();
    writeln!(w, "samples_per_node = {}", m.join(","))?;
    writeln!(w, "tau = {}", cfg.tau)?;
    writeln!(w, "noise_std = {}", cfg.noise_std)?;
    writeln!(w, "tau_offset = {}", inp.truth.quantile_offset(cfg.tau)?)?;
    let truth: Vec<String> = inp
        .truth
        .coefficients()
        .iter()
        .map(|v| format!("{v}"))
        .collect();
    writeln!(w, "truth = {}", truth.join(","))?;
    let active: Vec<String> = inp.truth.active_set().iter().map(|i| i.to_string()).collect();
    writeln!(w, "active_set = {}", active.join(","))?;
    writeln!(w, "seed_topology = {}", inp.seed_topology)?;
    writeln!(w, "seed_support = {}", inp.seed_support)?;
    writeln!(w, "seed_design_base = {}", inp.seed_design_base)?;
    writeln!(w, "seed_noise_base = {}", inp.seed_noise_base)?;
    writeln!(w, "seed_note = per-node seeds are the base seeds plus the node index")?;
    Ok(())
}

/// Runs one algorithm over all trials, writing per-iteration logs and the
/// summary file under `output_dir/<algorithm>/`.
pub fn cmd_run(cfg: &ExperimentConfig, alg: Algorithm) -> Result<()> {
    let inputs = build_all_trials(cfg)?;
    // validate before creating any output
    cmd_validate_quiet(cfg, &inputs)?;
    let runs = run_all_trials(cfg, alg, &inputs)?;
    let dir = cfg.output_dir.join(alg.name());
    fs::create_dir_all(&dir)?;
    for (t, run) in runs.iter().enumerate() {
        write_trial_iterations(&dir.join(format!("trial_{t:03}_iterations.csv")), run)?;
    }
    let rows: Vec<(usize, &TrialRun)> = runs.iter().enumerate().collect();
    write_summary(&dir.join("summary.csv"), &rows)?;
    Ok(())
}

fn mean_curves(runs: &[TrialRun], pick: impl Fn(&TrialRun) -> &[f64]) -> Vec<f64> {
    let len = runs.iter().map(|r| pick(r).len()).max().unwrap_or(0);
    let mut out = vec![0.0; len];
    for run in runs {
        let c = pick(run);
        for (k, slot) in out.iter_mut().enumerate() {
            // trials that stopped early hold their final value
            let v = if c.is_empty() {
                f64::NAN
            } else {
                c[k.min(c.len() - 1)]
            };
            *slot += v;
        }
    }
    for v in &mut out {
        *v /= runs.len() as f64;
    }
    out
}

/// Runs all three algorithms on identical per-trial data, then writes the
/// mean-curve CSV (`k,alg,mse,recog,net_mse`) and one SVG chart per
/// metric.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<()> {
    let inputs = build_all_trials(cfg)?;
    cmd_validate_quiet(cfg, &inputs)?;
    fs::create_dir_all(&cfg.output_dir)?;

    let algs = [Algorithm::DsadMcp, Algorithm::DsadScad, Algorithm::Baseline];
    let mut curves: Vec<(Algorithm, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for alg in algs {
        let runs = run_all_trials(cfg, alg, &inputs)?;
        let mse = mean_curves(&runs, |r| &r.curves.mse);
        let recog = mean_curves(&runs, |r| &r.curves.recognition);
        let net = mean_curves(&runs, |r| &r.curves.network_mse);
        let dir = cfg.output_dir.join(alg.name());
        fs::create_dir_all(&dir)?;
        let rows: Vec<(usize, &TrialRun)> = runs.iter().enumerate().collect();
        write_summary(&dir.join("summary.csv"), &rows)?;
        curves.push((alg, mse, recog, net));
    }

    let mut w = BufWriter::new(fs::File::create(cfg.output_dir.join("compare_curves.csv"))?);
    writeln!(w, "k,alg,mse,recog,net_mse")?;
    for (alg, mse, recog, net) in &curves {
        for k in 0..mse.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                k + 1,
                alg.name(),
                fmt_exact(mse[k]),
                fmt_exact(recog[k]),
                fmt_exact(net[k])
            )?;
        }
    }
    drop(w);

    let charts: [(&str, &str, fn(&(Algorithm, Vec<f64>, Vec<f64>, Vec<f64>)) -> &Vec<f64>); 3] = [
        ("mse.svg", "MSE", |c| &c.1),
        ("recognition_accuracy.svg", "recognition accuracy", |c| &c.2),
        ("network_mse.svg", "network MSE", |c| &c.3),
    ];
    for (file, label, pick) in charts {
        let series_points: Vec<(String, Vec<(f64, f64)>)> = curves
            .iter()
            .map(|c| {
                (
                    c.0.name().to_string(),
                    pick(c)
                        .iter()
                        .enumerate()
                        .map(|(k, &v)| ((k + 1) as f64, v))
                        .collect(),
                )
            })
            .collect();
        let series: Vec<svg::Series<'_>> = series_points
            .iter()
            .map(|(name, points)| svg::Series { name, points })
            .collect();
        let mut f = BufWriter::new(fs::File::create(cfg.output_dir.join(file))?);
        svg::write_line_chart(&mut f, label, "iteration", label, &series)?;
    }
    Ok(())
}

fn cmd_validate_quiet(
    cfg: &ExperimentConfig,
    inputs: &[TrialInputs],
) -> Result<ValidationReport> {
    let inp = inputs
        .first()
        .ok_or_else(|| Error::Config("no trials configured".into()))?;
    let m_max = inp
        .data
        .iter()
        .map(NodeData::num_samples)
        .max()
        .unwrap_or(0);
    let omega = match cfg.omega {
        Some(v) => v,
        None => compute_omega(&inp.data, cfg.tau, cfg.lambda, m_max)?,
    };
    let solver_cfg = cfg.solver_config(cfg.penalty, omega)?;
    validate_config(&solver_cfg, &inp.data, &inp.graph)
}

/// Builds trial 0 and validates the solver configuration against it,
/// returning the report.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let inp = build_trial(cfg, 0)?;
    cmd_validate_quiet(cfg, std::slice::from_ref(&inp))
}
