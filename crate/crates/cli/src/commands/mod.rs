mod benchmark;
mod evaluate;
mod impute;
mod regress;
mod simulate;

pub use benchmark::{benchmark, BenchmarkSettings, Cell};
pub use evaluate::evaluate;
pub use impute::impute;
pub use regress::regress;
pub use simulate::simulate;

use std::collections::BTreeMap;
use std::path::Path;

use copula_impute::copula::{export, summarize, ChainProgress, ImputationSummary};
use copula_impute::evaluation::{EvaluationInput, MetricsReport};
use copula_impute::kernels::substream;
use copula_impute::simulation::TruthRecord;
use copula_impute::{add_lags, run_chain, ChainResult, ColumnKind, DataTable, Error, Result};
use rand::RngCore;

use crate::config::Settings;
use crate::output::{reset_dir, write_with};

pub const FRAMES_DIR: &str = "frames";
pub const DRAWS_DIR: &str = "draws";
pub const DRAWS_FILE: &str = "imputations.csv";
pub const CORRELATIONS_FILE: &str = "correlations.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const SCHEMA_FILE: &str = "schema.json";

/// Progress reporter writing to standard error every notification.
pub fn progress(label: String, quiet: bool) -> impl FnMut(ChainProgress) {
    move |p| {
        if !quiet {
            eprintln!("{label}iteration {}/{}", p.iteration, p.total);
        }
    }
}

/// Independent seed for replicate or grid cell `index` under `root`.
pub fn replicate_seed(root: u64, index: usize) -> u64 {
    substream(root, index as u64 + 1).next_u64()
}

/// Runs `f` on a pool of `jobs` threads (rayon's default when `None`).
pub fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Adds lags when requested, runs the chain keeping the original data
/// columns, and summarizes the draws.
pub fn impute_table(
    table: &DataTable,
    settings: &Settings,
    seed: u64,
    label: String,
    quiet: bool,
) -> Result<(ChainResult, ImputationSummary)> {
    let keep: Vec<String> = table.data_columns().iter().map(|&j| table.column(j).name.clone()).collect();
    let working = if settings.lags > 0 {
        let exclude: Vec<&str> = settings.lag_exclude.iter().map(String::as_str).collect();
        add_lags(table, settings.lags, &exclude)?
    } else {
        table.clone()
    };
    let chain = run_chain(&working, &settings.chain(seed, Some(keep)), &mut progress(label, quiet))?;
    let summary = summarize(&chain, settings.level, settings.discrete_point)?;
    Ok((chain, summary))
}

/// Writes `frames/`, `draws/` and `summary.csv` under `dir`.
pub fn write_chain_outputs(
    dir: &Path,
    table: &DataTable,
    chain: &ChainResult,
    summary: &ImputationSummary,
    frames: bool,
) -> Result<()> {
    let frames_dir = dir.join(FRAMES_DIR);
    if frames_dir.exists() {
        std::fs::remove_dir_all(&frames_dir).map_err(|e| Error::Data(format!("{}: {e}", frames_dir.display())))?;
    }
    if frames {
        let names: Vec<&str> = table.names();
        reset_dir(&frames_dir)?;
        let width = chain.frame_count().to_string().len().max(4);
        for k in 0..chain.frame_count() {
            let frame = chain.frame(k)?.select(&names)?;
            frame.write_csv_file(frames_dir.join(format!("frame_{:0width$}.csv", k + 1)))?;
        }
    }
    let draws_dir = dir.join(DRAWS_DIR);
    reset_dir(&draws_dir)?;
    write_with(&draws_dir.join(DRAWS_FILE), |w| export::write_long_draws(chain, w))?;
    write_with(&draws_dir.join(CORRELATIONS_FILE), |w| export::write_correlations(chain, w))?;
    write_with(&dir.join(SUMMARY_FILE), |w| export::write_summary(summary, w))
}

pub fn kinds_of(table: &DataTable) -> BTreeMap<String, ColumnKind> {
    table.columns().iter().map(|c| (c.name.clone(), c.kind)).collect()
}

/// Metrics of a chain against known truth.
pub fn evaluate_chain(
    dataset: &str,
    truth: &TruthRecord,
    masked: &DataTable,
    chain: &ChainResult,
    summary: &ImputationSummary,
    settings: &Settings,
) -> Result<MetricsReport> {
    let draws = export::draw_map(chain);
    let points = summary.points();
    let kinds = kinds_of(masked);
    let input = EvaluationInput {
        truth,
        draws: &draws,
        points: &points,
        kinds: &kinds,
        masked: Some(masked),
        level: settings.level,
        error_mode: settings.error_mode,
    };
    MetricsReport::compute(dataset, &input, chain.duration.as_secs_f64())
}
