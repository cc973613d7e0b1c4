//! Command-line front end: dataset generation, solver/baseline runs,
//! three-way comparisons and configuration validation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsad::error::Error;
use dsad::harness::{self, Algorithm, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "dsad",
    about = "Decentralized smoothing ADMM for sparse-penalized quantile regression",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (flat key = value format).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides the config's base_seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count (overrides the config's trials).
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    #[value(name = "dsad_mcp")]
    DsadMcp,
    #[value(name = "dsad_scad")]
    DsadScad,
    #[value(name = "baseline")]
    Baseline,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::DsadMcp => Algorithm::DsadMcp,
            AlgorithmArg::DsadScad => Algorithm::DsadScad,
            AlgorithmArg::Baseline => Algorithm::Baseline,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write per-trial graph, node data and manifest files.
    Generate(Common),
    /// Run one algorithm over all trials; write iteration logs and a summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// Which algorithm to run.
        #[arg(long)]
        algorithm: AlgorithmArg,
    },
    /// Run all three algorithms on identical seeds; write mean curves and charts.
    Compare(Common),
    /// Check the schedule and consensus-weight conditions; print the report.
    Validate(Common),
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = load_config(&common)?;
            harness::cmd_generate(&cfg)?;
            println!(
                "wrote {} trial dataset(s) under {}",
                cfg.trials,
                cfg.output_dir.display()
            );
        }
        Command::Run { common, algorithm } => {
            let cfg = load_config(&common)?;
            let alg: Algorithm = algorithm.into();
            harness::cmd_run(&cfg, alg)?;
            println!(
                "ran {} on {} trial(s); outputs under {}",
                alg.name(),
                cfg.trials,
                cfg.output_dir.join(alg.name()).display()
            );
        }
        Command::Compare(common) => {
            let cfg = load_config(&common)?;
            harness::cmd_compare(&cfg)?;
            println!(
                "comparison outputs under {} (compare_curves.csv, mse.svg, recognition_accuracy.svg, network_mse.svg)",
                cfg.output_dir.display()
            );
        }
        Command::Validate(common) => {
            let cfg = load_config(&common)?;
            let report = harness::cmd_validate(&cfg)?;
            print!("{report}");
            println!("validation passed");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
