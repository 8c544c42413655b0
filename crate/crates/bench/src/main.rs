//! Benchmark harness for the zo-frames estimators.
//!
//! Subcommands: `estimate` (one estimator, per-trial and aggregate rows),
//! `sweep-k` (aggregate error across a frame-size grid), `table` (recorded
//! reference-error comparisons), `moments` (sphere-moment z-score checks),
//! and `zo-gd` (zeroth-order gradient-descent trajectory). Every run is
//! reproducible bit-for-bit from its flags and seed.

mod commands;
mod config;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "zo-bench", version, about = "Benchmark runner for zeroth-order derivative estimators")]
struct Cli {
    /// key=value file supplying defaults for the long flags; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Objective: "exp-sines", "linear:<c-file>", or "quadratic:<A-file>[,<b-file>]".
    #[arg(long, global = true)]
    function: Option<String>,

    /// Problem dimension (required for exp-sines; checked against files).
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Frame size / direction count (defaults to n).
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Finite-difference granularity.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Evaluation point: "zero", "pi4", "pi2", or a vector file.
    #[arg(long, global = true)]
    x: Option<String>,

    /// Monte Carlo trials (estimate/sweep-k/table) or draws (moments).
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Base seed; trial t uses substream t.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Estimator name, e.g. grad-stiefel or hess-entrywise.
    #[arg(long, global = true)]
    estimator: Option<String>,

    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Step size for zo-gd.
    #[arg(long, global = true)]
    eta: Option<f64>,

    /// Step count for zo-gd.
    #[arg(long, global = true)]
    steps: Option<u64>,

    /// Which reference table to reproduce: t1, t-entry, t-hess1, t-hess2.
    #[arg(long = "table-name", global = true)]
    table_name: Option<String>,

    /// l1 sparsity budget s for grad-comparison (default unbounded).
    #[arg(long, global = true)]
    sparsity: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator and emit per-trial plus aggregate rows.
    Estimate,
    /// Sweep the frame size over {1, 2, 5, ...} up to n.
    SweepK,
    /// Reproduce a recorded reference-error table.
    Table,
    /// Monte Carlo sphere-moment checks with z-scores.
    Moments,
    /// Zeroth-order gradient descent trajectory.
    ZoGd,
}

/// Failures carrying their process exit code: 2 parameter error, 3
/// evaluation failure, 4 moment-check failure, 1 anything else.
pub enum Failure {
    Usage(String),
    Io(std::io::Error),
    Estimator(zo_frames::Error),
    MomentCheck(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 1,
            Failure::Estimator(e) => estimator_exit_code(e),
            Failure::MomentCheck(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Io(e) => e.to_string(),
            Failure::Estimator(e) => e.to_string(),
            Failure::MomentCheck(m) => m.clone(),
        }
    }
}

fn estimator_exit_code(error: &zo_frames::Error) -> u8 {
    use zo_frames::Error::*;
    match error {
        NonFiniteEvaluation { .. } | SingularGram { .. } => 3,
        TrialFailed { source, .. } => estimator_exit_code(source),
        _ => 2,
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<zo_frames::Error> for Failure {
    fn from(e: zo_frames::Error) -> Self {
        Failure::Estimator(e)
    }
}

pub fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Err(failure) = config::apply_file_defaults(&mut cli) {
        eprintln!("error: {}", failure.message());
        return ExitCode::from(failure.exit_code());
    }
    let result = match cli.command {
        Command::Estimate => commands::estimate(&cli),
        Command::SweepK => commands::sweep_k(&cli),
        Command::Table => commands::table(&cli),
        Command::Moments => commands::moments(&cli),
        Command::ZoGd => commands::zo_gd(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
