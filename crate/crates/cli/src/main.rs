//! `smm`: batch front end for the semiclassical toolkit.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 numerical failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "smm", version, about = "Equilibrium measures, kernels and samples for semi-classical matrix models")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "SMM_OUTDIR", default_value = "smm-out")]
    pub out: PathBuf,

    /// Worker threads for kernel grids and multi-chain sampling.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

/// A potential given either as a JSON config or as a named scenario.
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Potential config (JSON).
    #[arg(required_unless_present = "scenario", conflicts_with = "scenario")]
    pub config: Option<PathBuf>,

    /// Named scenario instead of a config.
    #[arg(long)]
    pub scenario: Option<String>,

    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a potential config.
    Validate { config: PathBuf },
    /// Solve for the equilibrium measure and check the variational conditions.
    Equilibrium {
        config: PathBuf,
        /// one_cut, symmetric_two_cut or hard_edge_one_cut.
        #[arg(long)]
        structure: Option<String>,
        /// Density grid as lo:hi:points.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Critical points and model-problem data.
    Classify {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        structure: Option<String>,
    },
    /// Finite-n correlation kernel on a grid.
    Kernel {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        /// raw, x_star, or a number selecting the nearest critical point.
        #[arg(long, default_value = "raw", allow_hyphen_values = true)]
        at: String,
        /// Grid as lo:hi:points, used for both variables.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        structure: Option<String>,
    },
    /// Kernel convergence scan for a named scenario.
    Converge {
        scenario: String,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Metropolis samples and their density against the equilibrium measure.
    Sample {
        config: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        /// Defaults to a tenth of the steps.
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 1)]
        chains: u64,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long)]
        structure: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}
