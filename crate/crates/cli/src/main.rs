//! `censored-em`: fit normal, Laplace and Rayleigh models to right-censored
//! samples, convert Type-II data and simulate censored samples.
//!
//! Exit status: 0 on success (a converged fit), 2 when a fit stops without
//! converging, 1 on any usage or input error.

mod data;
mod fit;

use std::path::PathBuf;
use std::process::ExitCode;

use censored_em::rng::DEFAULT_SEED;
use censored_em::{Algorithm, Family};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "censored-em",
    version,
    about = "Maximum-likelihood estimation from right-censored samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model and write the per-iteration trace.
    Fit(FitArgs),
    /// Turn a list of the r smallest lifetimes into a (w, delta) CSV.
    ConvertType2(ConvertArgs),
    /// Draw a censored sample from a model.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// normal, laplace or rayleigh.
    #[arg(long)]
    pub family: Family,
    /// em, mcem or direct [default: em for normal, mcem otherwise].
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Input CSV with header `w,delta`.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated starting values: mu,sigma2 (normal), mu,sigma
    /// (laplace) or beta (rayleigh). Defaults to moments of the uncensored
    /// values.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
    /// Monte Carlo replicates per iteration (mcem).
    #[arg(long, default_value_t = censored_em::FitConfig::DEFAULT_MC_SIZE)]
    pub k: usize,
    /// Grow K geometrically by this factor per iteration (mcem).
    #[arg(long)]
    pub k_growth: Option<f64>,
    /// Iteration cap [default: 500 for em, 15 for mcem, 10000 for direct].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Convergence tolerance on the largest parameter change.
    #[arg(long, default_value_t = censored_em::FitConfig::DEFAULT_TOL)]
    pub tol: f64,
    /// Stop mcem after this many consecutive changes below --tol instead of
    /// running the full iteration count.
    #[arg(long)]
    pub stop_after_small: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Where to write the trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Sampling threads (0 = one per core). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// File with one observed value per line.
    #[arg(long)]
    pub values: PathBuf,
    /// Total number of units on test.
    #[arg(long)]
    pub total_n: usize,
    /// Output CSV [default: stdout].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub family: Family,
    /// Comma-separated parameters, in the same layout as `fit --start`.
    #[arg(long, allow_hyphen_values = true)]
    pub params: String,
    /// Number of units.
    #[arg(long)]
    pub n: usize,
    /// Type-II censoring: observe only the r smallest lifetimes.
    #[arg(
        long,
        conflicts_with = "censor_time",
        required_unless_present = "censor_time"
    )]
    pub type2_r: Option<usize>,
    /// Type-I censoring at a common time (`inf` for none).
    #[arg(long, allow_hyphen_values = true)]
    pub censor_time: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV [default: stdout].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => fit::run(&args),
        Command::ConvertType2(args) => data::convert_type2(&args).map(|_| fit::Status::Done),
        Command::Simulate(args) => data::simulate(&args).map(|_| fit::Status::Done),
    };
    match outcome {
        Ok(fit::Status::Done) => ExitCode::SUCCESS,
        Ok(fit::Status::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
