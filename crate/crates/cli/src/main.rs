//! `thinarray` — dataset generation, emulator training, learning curves,
//! constrained optimization, and figure-data export for thinned antenna
//! array design.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime
//! failure. Every command is reproducible given identical flags and input
//! files; `--threads` (or `THINARRAY_THREADS`) caps the worker pool without
//! changing a single output bit.

mod commands;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "thinarray", version, about = "Thinned antenna-array design toolkit")]
struct Cli {
    /// Worker threads (0 = one per core); THINARRAY_THREADS is the fallback.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKindArg {
    Ridge,
    Rf,
    Knn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    #[value(name = "d_y")]
    DY,
    #[value(name = "d_z")]
    DZ,
    #[value(name = "alpha_y")]
    AlphaY,
    #[value(name = "alpha_z")]
    AlphaZ,
}

impl AxisArg {
    fn index(self) -> usize {
        match self {
            AxisArg::DY => 0,
            AxisArg::DZ => 1,
            AxisArg::AlphaY => 2,
            AxisArg::AlphaZ => 3,
        }
    }
}

/// Lattice shape shared by the simulation commands.
#[derive(clap::Args, Clone, Copy, Debug)]
struct LatticeArgs {
    /// Vertical element count of the lattice.
    #[arg(long, default_value_t = 100)]
    lattice_rows: usize,
    /// Horizontal element count of the lattice.
    #[arg(long, default_value_t = 99)]
    lattice_cols: usize,
    /// Active elements per mask (multiple of 4).
    #[arg(long, default_value_t = 64)]
    n_active: usize,
}

/// Emulator hyperparameters (which ones apply depends on --model).
#[derive(clap::Args, Clone, Copy, Debug)]
struct ModelHyperArgs {
    /// Ridge regularization strength.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Trees in the random forest.
    #[arg(long, default_value_t = 200)]
    n_trees: usize,
    /// Minimum samples per forest leaf.
    #[arg(long, default_value_t = 2)]
    min_leaf: usize,
    /// Bootstrap-resample the training set per tree.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    bootstrap: bool,
    /// Neighbors for the k-NN baseline.
    #[arg(long, default_value_t = 5)]
    k: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset of uniformly drawn input configurations.
    GenDataset {
        /// Scenario config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_configs: usize,
        /// Monte Carlo iterations per configuration.
        #[arg(long)]
        n_iter: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Train an emulator on a dataset and persist it as JSON.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        model: ModelKindArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        hyper: ModelHyperArgs,
    },
    /// Cross-validate an emulator over increasing training sizes.
    LearningCurve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        model: ModelKindArg,
        /// Comma-separated training sizes, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        hyper: ModelHyperArgs,
    },
    /// Maximize predicted mean SINR subject to a 5th-percentile floor.
    Optimize {
        /// Model file supplying the mean-SINR prediction.
        #[arg(long)]
        model_mean: PathBuf,
        /// Model file supplying the 5th-percentile prediction.
        #[arg(long)]
        model_p5: PathBuf,
        /// Coverage floor on predicted p5, dB.
        #[arg(long, default_value_t = 6.0)]
        constraint_db: f64,
        /// Total surrogate evaluations.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate per-cell activation probabilities of a mask family.
    ActivationMap {
        #[arg(long, default_value_t = 0.5)]
        d_y: f64,
        #[arg(long, default_value_t = 0.5)]
        d_z: f64,
        #[arg(long)]
        alpha_y: f64,
        #[arg(long)]
        alpha_z: f64,
        #[arg(long)]
        n_samples: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Predict along one input axis with the others pinned at a center.
    Slices {
        #[arg(long)]
        model_mean: PathBuf,
        #[arg(long)]
        model_p5: PathBuf,
        /// Center point d_y,d_z,alpha_y,alpha_z.
        #[arg(long, value_delimiter = ',', required = true)]
        center: Vec<f64>,
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long, default_value_t = 41)]
        n_points: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-simulate reference antennas, random configurations, and the
    /// optimal family for a scatter comparison.
    Compare {
        /// Optimal input d_y,d_z,alpha_y,alpha_z.
        #[arg(long, value_delimiter = ',', required = true)]
        optimal: Vec<f64>,
        #[arg(long, default_value_t = 30)]
        n_optimal: usize,
        #[arg(long, default_value_t = 300)]
        n_random: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_iter: usize,
        #[arg(long)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
}

/// Failures split into usage errors (exit 2) and runtime errors (exit 3).
#[derive(Debug)]
enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    fn usage<E: Into<anyhow::Error>>(e: E) -> Self {
        CliError::Usage(e.into())
    }

    fn runtime<E: Into<anyhow::Error>>(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("THINARRAY_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = resolve_threads(cli.threads);

    let run = || commands::dispatch(cli.command);
    let outcome = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build();
            match pool {
                Ok(pool) => pool.install(run),
                Err(e) => Err(CliError::usage(anyhow::anyhow!("bad --threads value: {e}"))),
            }
        }
        None => run(),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
