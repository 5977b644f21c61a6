#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod pool;
mod sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "resetgeo", version, about = "Geometric complexity of reset maps and channels")]
#[command(after_help = "Exit status: 0 on success, 1 on input or computation errors, 2 if an inequality is violated.")]
pub struct Cli {
    /// Seed for random ensembles.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; analyses default to json, sweeps and paths to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Row sums or eigenvalues at or below this count as zero.
    #[arg(long, global = true, default_value_t = resetgeo::DEFAULT_FLOOR)]
    pub floor: f64,
    /// Slack allowed when checking `ε·e^ℓ ≥ 1` (default 1e-12 classical, 1e-10 quantum).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct EstimatorArgs {
    /// Run the geodesic upper estimator.
    #[arg(long)]
    pub estimate: bool,
    /// Path segments for the estimator.
    #[arg(long, default_value_t = 64)]
    pub k: usize,
    /// Estimator iteration budget.
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Length, bracket, entropic bound and trade-off margin of a stochastic map.
    Analyze {
        /// JSON map file `{"dim", "rows"}`; columns sum to one.
        #[arg(long)]
        map: PathBuf,
        /// Undesired states, 1-based and comma separated (default: all but state 1).
        #[arg(long, value_delimiter = ',')]
        undesired: Vec<usize>,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// Optimized constrained path from the identity to a map, with its length.
    Path {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        /// Weight of the target map in the positive interpolation base.
        #[arg(long, default_value_t = 0.5)]
        mix: f64,
        /// Embed per-sample matrices in json output.
        #[arg(long)]
        with_maps: bool,
    },
    /// Classical or quantum parameter sweep, one row per grid point.
    #[command(long_about = sweep::ENSEMBLE_HELP)]
    Sweep(sweep::SweepArgs),
    /// Protocol-count bound for a sequence of rate matrices.
    ProtocolCheck {
        /// JSON file `{"dim", "protocols": [{"rows", "duration"}]}`.
        #[arg(long)]
        protocols: PathBuf,
        /// Bound on every escape rate times duration.
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
    },
    /// Determinant obstruction and bounded search over products of two-state primitives.
    DecomposeSearch {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 0.1)]
        grid: f64,
        /// Only allow primitives with `α + β ≤ 1`.
        #[arg(long)]
        sum_constraint: bool,
    },
    /// Quantum length, bracket, error and protocol bounds of a Kraus channel.
    QuantumAnalyze {
        /// JSON file `{"dim", "kraus": [[[re, im], ...], ...]}`, row-major operators.
        #[arg(long)]
        channel: PathBuf,
        /// JSON file `{"dim", "matrix": [[re, im], ...]}`; overrides --undesired.
        #[arg(long)]
        projector: Option<PathBuf>,
        /// Undesired computational basis states, 1-based (default: all but state 1).
        #[arg(long, value_delimiter = ',')]
        undesired: Vec<usize>,
        /// Bandwidth or coupling bound for the protocol-count bounds.
        #[arg(long)]
        gamma: Option<f64>,
        /// Also run the operator scaling solver (dimension 2 only).
        #[arg(long)]
        solve: bool,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// Quantum sweep; same options as `sweep`, restricted to channel families.
    #[command(long_about = sweep::ENSEMBLE_HELP)]
    QuantumSweep(sweep::SweepArgs),
}

pub enum Failure {
    Input(String),
}

impl From<resetgeo::Error> for Failure {
    fn from(e: resetgeo::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// What a command produced: the main text and whether any inequality failed.
pub struct Emitted {
    pub text: String,
    pub side: Option<String>,
    pub violation: bool,
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved here for violations
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(em) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &em.text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
                if let Some(side) = &em.side {
                    println!("{side}");
                }
            } else {
                print!("{}", em.text);
                if let Some(side) = &em.side {
                    eprintln!("{side}");
                }
            }
            if em.violation {
                eprintln!("error: inequality violated; see the `violation` flags");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
