use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use copula_impute::evaluation::ErrorMode;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "COPULA_IMPUTE_OUTPUT_ROOT";
/// Output root used when neither `--out` nor the environment variable is set.
pub const DEFAULT_OUTPUT_ROOT: &str = "copula-impute-output";

#[derive(Debug, Parser)]
#[command(name = "copula-impute", version, about = "Gaussian-copula multiple imputation")]
pub struct Cli {
    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Suppress progress messages on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Impute the missing cells of a CSV file.
    Impute(ImputeArgs),
    /// Simulate panels and inject missingness.
    Simulate(SimulateArgs),
    /// Score a finished imputation run against known truth.
    Evaluate(EvaluateArgs),
    /// Simulate, impute and evaluate over a grid of panel sizes.
    Benchmark(BenchmarkArgs),
    /// Bayesian linear regression with imputation inside the sampler.
    Regress(RegressArgs),
}

fn parse_error_mode(s: &str) -> Result<ErrorMode, String> {
    match s {
        "each-draw" | "each_draw" => Ok(ErrorMode::EachDraw),
        "cell-average" | "cell_average" => Ok(ErrorMode::CellAverage),
        _ => Err(format!("unknown error mode `{s}` (expected each-draw or cell-average)")),
    }
}

/// Chain and output flags shared by the imputing subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct ChainArgs {
    /// Root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total Gibbs iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Keep every k-th iteration.
    #[arg(long)]
    pub thin: Option<usize>,
    /// Thinned draws discarded before saving.
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Lag columns added per variable (panel input only).
    #[arg(long)]
    pub lags: Option<usize>,
    /// Credible-interval level.
    #[arg(long)]
    pub level: Option<f64>,
    /// How errors aggregate over draws: each-draw or cell-average.
    #[arg(long, value_parser = parse_error_mode)]
    pub error_mode: Option<ErrorMode>,
    /// Skip writing one CSV per saved frame.
    #[arg(long)]
    pub no_frames: bool,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON map from column name to kind.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Truth CSV (`row,column,value`); when given, metrics are written too.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of panel units.
    #[arg(long)]
    pub units: Option<usize>,
    /// Time points per unit.
    #[arg(long)]
    pub periods: Option<usize>,
    /// AR(1) autocorrelation.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Number of independent panels.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Mask every data cell with this probability instead of the MAR rule.
    #[arg(long)]
    pub missing_rate: Option<f64>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Truth CSV (`row,column,value`).
    #[arg(long)]
    pub truth: PathBuf,
    /// Output directory of an `impute` run.
    #[arg(long)]
    pub run: PathBuf,
    /// Masked input, used for the mode baseline.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column schema; defaults to the run's `schema.json`.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated panel lengths.
    #[arg(long, value_delimiter = ',')]
    pub periods: Option<Vec<usize>>,
    /// Comma-separated autocorrelations.
    #[arg(long, value_delimiter = ',')]
    pub rhos: Option<Vec<f64>>,
    /// Panels per grid cell.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Number of panel units.
    #[arg(long)]
    pub units: Option<usize>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON map from column name to kind.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Regression specification JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Outcome column (used when no spec is given).
    #[arg(long)]
    pub outcome: Option<String>,
    /// Comma-separated predictor columns.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    #[command(flatten)]
    pub chain: ChainArgs,
}
