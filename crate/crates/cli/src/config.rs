//! Layered run configuration: command-line flags over a JSON file over defaults.

use std::path::Path;

use copula_impute::copula::DiscretePoint;
use copula_impute::evaluation::ErrorMode;
use copula_impute::regression::RegressionSpec;
use copula_impute::simulation::{MissingnessConfig, SimulationConfig, GRID_PERIODS, GRID_RHOS};
use copula_impute::{ChainConfig, Error, MissingTokens, Result, Schema};
use serde::{Deserialize, Serialize};

use crate::cli::ChainArgs;

/// Contents of a `--config` JSON file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub thin: Option<usize>,
    pub burn_in: Option<usize>,
    pub lags: Option<usize>,
    pub lag_exclude: Option<Vec<String>>,
    pub level: Option<f64>,
    pub prior_df: Option<f64>,
    pub prior_scale: Option<f64>,
    pub discrete_point: Option<DiscretePoint>,
    pub error_mode: Option<ErrorMode>,
    pub missing_tokens: Option<Vec<String>>,
    pub frames: Option<bool>,
    pub jobs: Option<usize>,
    pub schema: Option<Schema>,
    pub simulation: Option<SimulationConfig>,
    pub missingness: Option<MissingnessConfig>,
    pub replicates: Option<usize>,
    pub grid: Option<GridConfig>,
    pub regression: Option<RegressionSpec>,
}

impl FileConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_json_str(&text)
            }
        }
    }
}

/// Benchmark grid: every `periods × rhos` cell is run `replicates` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_periods")]
    pub periods: Vec<usize>,
    #[serde(default = "default_rhos")]
    pub rhos: Vec<f64>,
    #[serde(default = "default_grid_replicates")]
    pub replicates: usize,
}

fn default_periods() -> Vec<usize> {
    vec![20]
}
fn default_rhos() -> Vec<f64> {
    vec![0.85]
}
fn default_grid_replicates() -> usize {
    1
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            periods: default_periods(),
            rhos: default_rhos(),
            replicates: default_grid_replicates(),
        }
    }
}

impl GridConfig {
    /// The full benchmark grid: six panel lengths, three autocorrelations,
    /// twenty replicates each.
    pub fn standard() -> Self {
        GridConfig {
            periods: GRID_PERIODS.to_vec(),
            rhos: GRID_RHOS.to_vec(),
            replicates: 20,
        }
    }

    pub fn cells(&self) -> usize {
        self.periods.len() * self.rhos.len() * self.replicates
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods.is_empty() || self.rhos.is_empty() || self.replicates == 0 {
            return Err(Error::Config("benchmark grid is empty".into()));
        }
        if let Some(t) = self.periods.iter().find(|&&t| t < 2) {
            return Err(Error::Config(format!("panel length {t} must be at least 2")));
        }
        if let Some(r) = self.rhos.iter().find(|r| r.is_nan() || r.abs() >= 1.0) {
            return Err(Error::Config(format!("autocorrelation {r} must lie in (-1, 1)")));
        }
        Ok(())
    }
}

/// Fully resolved chain and output settings, recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub iterations: usize,
    pub thin: usize,
    pub burn_in: usize,
    pub lags: usize,
    pub lag_exclude: Vec<String>,
    pub level: f64,
    pub prior_df: Option<f64>,
    pub prior_scale: Option<f64>,
    pub discrete_point: DiscretePoint,
    pub error_mode: ErrorMode,
    pub missing_tokens: Vec<String>,
    pub frames: bool,
    pub jobs: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_ITERATIONS: usize = 3000;
pub const DEFAULT_THIN: usize = 3;
pub const DEFAULT_BURN_IN: usize = 500;
pub const DEFAULT_LEVEL: f64 = 0.95;

impl Settings {
    /// Merges `args` over `file` over built-in defaults. `default_lags` is the
    /// subcommand's own default lag count.
    pub fn resolve(file: &FileConfig, args: &ChainArgs, jobs: Option<usize>, default_lags: usize) -> Result<Self> {
        let s = Settings {
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            iterations: args.iters.or(file.iterations).unwrap_or(DEFAULT_ITERATIONS),
            thin: args.thin.or(file.thin).unwrap_or(DEFAULT_THIN),
            burn_in: args.burnin.or(file.burn_in).unwrap_or(DEFAULT_BURN_IN),
            lags: args.lags.or(file.lags).unwrap_or(default_lags),
            lag_exclude: file.lag_exclude.clone().unwrap_or_default(),
            level: args.level.or(file.level).unwrap_or(DEFAULT_LEVEL),
            prior_df: file.prior_df,
            prior_scale: file.prior_scale,
            discrete_point: file.discrete_point.unwrap_or_default(),
            error_mode: args.error_mode.or(file.error_mode).unwrap_or_default(),
            missing_tokens: file
                .missing_tokens
                .clone()
                .unwrap_or_else(|| MissingTokens::default().0),
            frames: !args.no_frames && file.frames.unwrap_or(true),
            jobs: jobs.or(file.jobs),
        };
        if !(s.level > 0.0 && s.level < 1.0) {
            return Err(Error::Config(format!("--level {} must lie in (0, 1)", s.level)));
        }
        if s.jobs == Some(0) {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        if s.iterations == 0 || s.thin == 0 {
            return Err(Error::Config("--iters and --thin must be at least 1".into()));
        }
        if s.burn_in >= s.iterations / s.thin {
            return Err(Error::Config(format!(
                "burn-in of {} thinned draws leaves no frames from {} iterations at thin {}",
                s.burn_in, s.iterations, s.thin
            )));
        }
        Ok(s)
    }

    /// Chain settings for `seed`, retaining draws for `keep` columns only.
    pub fn chain(&self, seed: u64, keep: Option<Vec<String>>) -> ChainConfig {
        let mut c = ChainConfig::new(self.iterations, self.thin, self.burn_in, seed);
        c.prior_df = self.prior_df;
        c.prior_scale = self.prior_scale;
        c.keep_columns = keep;
        c
    }

    pub fn tokens(&self) -> MissingTokens {
        MissingTokens(self.missing_tokens.clone())
    }
}

/// Schema from `--schema` when given, else from the config file.
pub fn resolve_schema(flag: Option<&Path>, file: &FileConfig) -> Result<Schema> {
    match (flag, &file.schema) {
        (Some(p), _) => Schema::from_json_file(p),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Err(Error::Config("a column schema is required (--schema or `schema` in --config)".into())),
    }
}
