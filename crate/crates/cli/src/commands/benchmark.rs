use copula_impute::evaluation::{write_tidy_csv, MetricsReport};
use copula_impute::kernels::substream;
use copula_impute::simulation::{generate_panel, inject_mar, MissingnessConfig, SimulationConfig};
use copula_impute::Result;
use rayon::prelude::*;
use serde::Serialize;

use super::*;
use crate::cli::BenchmarkArgs;
use crate::config::{FileConfig, GridConfig, Settings};
use crate::manifest::{now_unix_ms, RunManifest};
use crate::output::{ensure_dir, output_dir, write_json};

/// Default lag count for simulated panels.
pub const BENCHMARK_LAGS: usize = 4;
pub const FAILURES_FILE: &str = "failures.json";

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkSettings {
    #[serde(flatten)]
    pub chain: Settings,
    pub grid: GridConfig,
    pub simulation: SimulationConfig,
    pub missingness: MissingnessConfig,
}

impl BenchmarkSettings {
    pub fn resolve(file: &FileConfig, args: &BenchmarkArgs, jobs: Option<usize>) -> Result<Self> {
        let chain = Settings::resolve(file, &args.chain, jobs, BENCHMARK_LAGS)?;
        let mut grid = file.grid.clone().unwrap_or_default();
        if let Some(p) = &args.periods {
            grid.periods = p.clone();
        }
        if let Some(r) = &args.rhos {
            grid.rhos = r.clone();
        }
        if let Some(n) = args.replicates.or(file.replicates) {
            grid.replicates = n;
        }
        grid.validate()?;
        let mut simulation = file.simulation.clone().unwrap_or_default();
        if let Some(u) = args.units {
            simulation.units = u;
        }
        simulation.validate()?;
        let missingness = file.missingness.clone().unwrap_or_else(MissingnessConfig::default_mar);
        missingness.validate()?;
        Ok(BenchmarkSettings {
            chain,
            grid,
            simulation,
            missingness,
        })
    }

    /// Grid cells in a fixed order: periods, then rho, then replicate.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.grid.cells());
        for &periods in &self.grid.periods {
            for &rho in &self.grid.rhos {
                for replicate in 0..self.grid.replicates {
                    out.push(Cell {
                        index: out.len(),
                        periods,
                        rho,
                        replicate,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cell {
    pub index: usize,
    pub periods: usize,
    pub rho: f64,
    pub replicate: usize,
}

impl Cell {
    pub fn name(&self) -> String {
        format!("T{}_rho{}_rep{}", self.periods, self.rho, self.replicate + 1)
    }
}

#[derive(Debug, Serialize)]
struct Failure {
    cell: String,
    error: String,
}

fn run_cell(cell: &Cell, settings: &BenchmarkSettings, quiet: bool) -> Result<MetricsReport> {
    let seed = replicate_seed(settings.chain.seed, cell.index);
    let sim = SimulationConfig {
        periods: cell.periods,
        rho: cell.rho,
        ..settings.simulation.clone()
    };
    let complete = generate_panel(&sim, &mut substream(seed, 1))?;
    let (masked, truth) = inject_mar(&complete, &settings.missingness, &mut substream(seed, 2))?;
    let label = format!("[{}] ", cell.name());
    let (chain, summary) = impute_table(&masked, &settings.chain, seed, label, quiet)?;
    let mut report = evaluate_chain(&cell.name(), &truth, &masked, &chain, &summary, &settings.chain)?;
    report.units = Some(sim.units);
    report.periods = Some(cell.periods);
    report.rho = Some(cell.rho);
    Ok(report)
}

/// Returns whether every grid cell succeeded.
pub fn benchmark(args: &BenchmarkArgs, jobs: Option<usize>, quiet: bool) -> Result<bool> {
    let started = now_unix_ms();
    let file = FileConfig::load(args.chain.config.as_deref())?;
    let settings = BenchmarkSettings::resolve(&file, args, jobs)?;
    let dir = output_dir(args.chain.out.as_deref(), "benchmark");
    ensure_dir(&dir)?;

    let cells = settings.cells();
    let results: Vec<Result<MetricsReport>> = with_pool(settings.chain.jobs, || {
        cells.par_iter().map(|c| run_cell(c, &settings, quiet)).collect()
    })?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (cell, result) in cells.iter().zip(results) {
        match result {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("cell {} failed: {e}", cell.name());
                failures.push(Failure {
                    cell: cell.name(),
                    error: e.to_string(),
                });
            }
        }
    }
    write_json(&dir.join(METRICS_FILE), &reports)?;
    write_with(&dir.join(METRICS_CSV), |w| write_tidy_csv(&reports, w))?;
    let failures_path = dir.join(FAILURES_FILE);
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path).map_err(|e| copula_impute::Error::Data(e.to_string()))?;
        }
    } else {
        write_json(&failures_path, &failures)?;
    }

    let mut manifest = RunManifest::new("benchmark", settings.chain.seed, &settings, started)?;
    manifest.inputs.extend(args.chain.config.clone());
    manifest.finish(&dir)?;
    println!("{}", dir.display());
    Ok(failures.is_empty())
}
