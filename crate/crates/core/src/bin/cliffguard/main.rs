//! `cliffguard` command-line interface.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cliffguard::Error;

#[derive(Parser, Debug)]
#[command(
    name = "cliffguard",
    version,
    about = "Clip-safety thresholds for sharpened reverse-KL distillation"
)]
pub struct Cli {
    /// Worker threads for parallel sweeps and bootstraps (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form threshold and sensitivities for one (p, b, c).
    Lamstar(LamstarArgs),
    /// Sharpened fixed point and clip safety at one lambda.
    FixedPoint(FixedPointArgs),
    /// Integrate one flow run and write its trajectory.
    Simulate(SimulateArgs),
    /// Run a lambda grid over many seeds.
    Sweep(SweepArgs),
    /// Empirical midpoint as a function of step budget.
    Drift(DriftArgs),
    /// Calibrate a threshold bracket from teacher traces.
    Calibrate(CalibrateArgs),
    /// Score a corpus of strict-K list outputs.
    Eval(EvalArgs),
    /// Lock prediction windows and check them against sweeps.
    #[command(subcommand)]
    Prereg(PreregCommand),
}

#[derive(Args, Debug)]
pub struct LamstarArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub c: f64,
    /// Also report the fixed point and safety at this lambda.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Entropy-bonus weight; adds the shifted threshold.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Logit tolerance for treating b as equal to p.
    #[arg(long, default_value_t = cliffguard::threshold::DEFAULT_EQ_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct FixedPointArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print machine-readable JSON to stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FlowArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub q0: Option<f64>,
    /// base_relative | no_base | aspo_flip
    #[arg(long)]
    pub rule: Option<String>,
    /// score_function | is_weighted
    #[arg(long)]
    pub estimator: Option<String>,
    /// deterministic | stochastic
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub warmup_steps: Option<u64>,
    /// Base seed (falls back to CLIFFGUARD_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Trajectory CSV (step, theta, q, lyapunov).
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Lambda grid: `start:stop:step` or a comma list.
    #[arg(long)]
    pub grid: Option<String>,
    /// Seeds: `a..b` (exclusive) or a comma list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// midpoint_fraction_of_peak | midpoint_fixed_threshold | onset_last_above | collapse_first_below
    #[arg(long)]
    pub rule_kind: Option<String>,
    #[arg(long)]
    pub rule_level: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Per-run CSV (lambda, seed, final_q, first_passage_step, clip_events, survival).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct DriftArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Step budgets, comma separated, increasing.
    #[arg(long)]
    pub budgets: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Teacher trace JSONL.
    #[arg(long)]
    pub teacher: PathBuf,
    /// Warmstart trace JSONL on the same prompts and positions.
    #[arg(long)]
    pub warmstart: Option<PathBuf>,
    /// Fixed warmstart mass; overrides the implied value.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub tau: f64,
    #[arg(long, default_value_t = 5.0)]
    pub c: f64,
    /// Bootstrap resamples (0 disables intervals).
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Subset sizes for the subsample CI-width table, comma separated.
    #[arg(long)]
    pub subsample_sizes: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub subsets: usize,
    /// Include the per-prompt spread table.
    #[arg(long)]
    pub class_spread: bool,
    /// Warmstart masses for the sensitivity table, comma separated.
    #[arg(long)]
    pub b_grid: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Corpus JSONL with id, output, gold.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "review_id")]
    pub id_key: String,
    #[arg(long, default_value = "score")]
    pub score_key: String,
    #[arg(long, requires = "score_max")]
    pub score_min: Option<f64>,
    #[arg(long, requires = "score_min")]
    pub score_max: Option<f64>,
    /// Repair duplicate-id lists before scoring.
    #[arg(long)]
    pub repair: bool,
    /// Per-record CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Subcommand, Debug)]
pub enum PreregCommand {
    /// Seal a window spec into a lock file.
    Lock {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a lock file and decide it against an observed sweep.
    Check {
        #[arg(long)]
        lock: PathBuf,
        /// Observed sweep: JSON, or CSV with a lambda column.
        #[arg(long)]
        observed: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::DigestMismatch { .. } => 3,
                Error::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
