use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{CopulaModel, CorrelationPrior};
use crate::data::{Column, DataTable};
use crate::error::{Error, Result};
use crate::kernels::substream;

/// MCMC run settings.
///
/// Every `thin`-th iteration is saved; the first `burn_in` saved frames are
/// discarded, leaving `iterations / thin - burn_in` frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub thin: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Prior degrees of freedom; defaults to `p + 2`.
    #[serde(default)]
    pub prior_df: Option<f64>,
    /// Prior scale multiplier of the identity; defaults to the prior df.
    #[serde(default)]
    pub prior_scale: Option<f64>,
    /// Restrict recorded draws to these columns (default: all copula columns).
    #[serde(default)]
    pub keep_columns: Option<Vec<String>>,
}

impl ChainConfig {
    pub fn new(iterations: usize, thin: usize, burn_in: usize, seed: u64) -> Self {
        ChainConfig {
            iterations,
            thin,
            burn_in,
            seed,
            prior_df: None,
            prior_scale: None,
            keep_columns: None,
        }
    }

    /// Number of frames a run with this config retains.
    pub fn saved_frames(&self) -> usize {
        (self.iterations / self.thin.max(1)).saturating_sub(self.burn_in)
    }

    pub fn prior(&self, p: usize) -> CorrelationPrior {
        let default = CorrelationPrior::default_for(p);
        let df = self.prior_df.unwrap_or(default.df);
        CorrelationPrior {
            df,
            scale: self.prior_scale.unwrap_or(df),
        }
    }

    /// Checks the config against a copula of dimension `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.iterations / self.thin <= self.burn_in {
            return Err(Error::Config(format!(
                "{} iterations thinned by {} leave no frames after a burn-in of {}",
                self.iterations, self.thin, self.burn_in
            )));
        }
        let prior = self.prior(p);
        if !(prior.df > p as f64 + 1.0) {
            return Err(Error::Config(format!(
                "prior df {} must exceed p + 1 = {}",
                prior.df,
                p + 1
            )));
        }
        if !(prior.scale > 0.0 && prior.scale.is_finite()) {
            return Err(Error::Config(format!("prior scale {} must be positive", prior.scale)));
        }
        Ok(())
    }
}

/// A missing cell tracked by a chain: row and table column index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellRef {
    pub row: usize,
    pub column: usize,
}

/// Output of [`run_chain`].
///
/// Completed frames are reconstructed on demand from the input table and the
/// per-cell draw tensor, which only stores missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    table: DataTable,
    tracked: Vec<usize>,
    cells: Vec<CellRef>,
    /// Frame-major: `draws[f * cells.len() + c]`.
    draws: Vec<f64>,
    correlations: Vec<DMatrix<f64>>,
    saved_iterations: Vec<usize>,
    copula_columns: Vec<String>,
    pub duration: Duration,
}

impl ChainResult {
    pub fn input(&self) -> &DataTable {
        &self.table
    }

    pub fn frame_count(&self) -> usize {
        self.saved_iterations.len()
    }

    /// Missing cells with recorded draws, column-major.
    pub fn cells(&self) -> &[CellRef] {
        &self.cells
    }

    pub fn draw(&self, frame: usize, cell: usize) -> f64 {
        self.draws[frame * self.cells.len() + cell]
    }

    /// All draws of one cell across frames.
    pub fn cell_draws(&self, cell: usize) -> Vec<f64> {
        (0..self.frame_count()).map(|f| self.draw(f, cell)).collect()
    }

    /// Saved correlation draws, one per frame.
    pub fn correlations(&self) -> &[DMatrix<f64>] {
        &self.correlations
    }

    /// Names of the copula columns, in correlation-matrix order.
    pub fn copula_columns(&self) -> &[String] {
        &self.copula_columns
    }

    pub fn saved_iterations(&self) -> &[usize] {
        &self.saved_iterations
    }

    /// Table indices of the data columns whose draws were recorded.
    pub fn tracked_columns(&self) -> &[usize] {
        &self.tracked
    }

    /// Completed dataset for saved frame `k`: identifier columns plus every
    /// tracked data column, with no missing cells.
    pub fn frame(&self, k: usize) -> Result<DataTable> {
        if k >= self.frame_count() {
            return Err(Error::Config(format!("frame {k} out of range")));
        }
        let mut columns: Vec<Column> = Vec::new();
        for (j, col) in self.table.columns().iter().enumerate() {
            if !col.kind.is_data() || self.tracked.contains(&j) {
                columns.push(col.clone());
            }
        }
        let offset = k * self.cells.len();
        for (c, cell) in self.cells.iter().enumerate() {
            let name = &self.table.column(cell.column).name;
            let col = columns.iter_mut().find(|col| &col.name == name).expect("tracked column");
            if let crate::data::ColumnData::Numeric(values) = &mut col.data {
                values[cell.row] = Some(self.draws[offset + c]);
            }
        }
        DataTable::new(columns)
    }
}

/// Progress notification: iterations completed out of the total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainProgress {
    pub iteration: usize,
    pub total: usize,
}

/// Interval, in iterations, between progress notifications.
pub const PROGRESS_EVERY: usize = 100;

/// Runs the copula Gibbs sampler on `table`.
///
/// Each iteration sweeps the latent scores and then redraws the correlation.
/// `progress` is called every [`PROGRESS_EVERY`] iterations and at the end.
pub fn run_chain(
    table: &DataTable,
    config: &ChainConfig,
    progress: &mut dyn FnMut(ChainProgress),
) -> Result<ChainResult> {
    let start = Instant::now();
    let model = CopulaModel::new(table)?;
    let p = model.dim();
    config.validate(p)?;
    let prior = config.prior(p);

    let tracked: Vec<usize> = match &config.keep_columns {
        None => (0..p).collect(),
        Some(names) => names
            .iter()
            .map(|name| {
                (0..p)
                    .find(|&k| &table.column(model.table_index(k)).name == name)
                    .ok_or_else(|| Error::Config(format!("`{name}` is not a copula column")))
            })
            .collect::<Result<_>>()?,
    };
    let mut tracked_sorted = tracked.clone();
    tracked_sorted.sort_unstable();
    tracked_sorted.dedup();

    let mut cells = Vec::new();
    let mut cell_latent = Vec::new();
    for &k in &tracked_sorted {
        for &row in model.missing_rows(k) {
            cells.push(CellRef {
                row,
                column: model.table_index(k),
            });
            cell_latent.push((row, k));
        }
    }

    let frames = config.saved_frames();
    let mut draws = Vec::with_capacity(frames * cells.len());
    let mut correlations = Vec::with_capacity(frames);
    let mut saved_iterations = Vec::with_capacity(frames);

    let mut rng = substream(config.seed, 0);
    let mut state = model.init_state()?;
    let at = |iteration: usize| move |e: Error| Error::AtIteration {
        iteration,
        source: Box::new(e),
    };
    for it in 1..=config.iterations {
        model.sweep_latent(&mut state, &mut rng).map_err(at(it))?;
        model
            .update_correlation(&mut state, &prior, &mut rng)
            .map_err(at(it))?;
        if it % config.thin == 0 && it / config.thin > config.burn_in {
            draws.extend(
                cell_latent
                    .iter()
                    .map(|&(row, k)| model.impute_value(k, state.z[(row, k)])),
            );
            correlations.push(state.c.clone());
            saved_iterations.push(it);
        }
        if it % PROGRESS_EVERY == 0 || it == config.iterations {
            progress(ChainProgress {
                iteration: it,
                total: config.iterations,
            });
        }
    }

    Ok(ChainResult {
        table: table.clone(),
        tracked: tracked_sorted.iter().map(|&k| model.table_index(k)).collect(),
        cells,
        draws,
        correlations,
        saved_iterations,
        copula_columns: (0..p)
            .map(|k| table.column(model.table_index(k)).name.clone())
            .collect(),
        duration: start.elapsed(),
    })
}
