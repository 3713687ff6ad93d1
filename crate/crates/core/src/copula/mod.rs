//! Gaussian-copula multiple imputation via the extended rank likelihood.

mod chain;
pub mod export;
mod model;
mod summary;

pub use chain::{run_chain, CellRef, ChainConfig, ChainProgress, ChainResult, PROGRESS_EVERY};
pub use model::{
    conditional_params, guard_conditioning, CopulaModel, CorrelationPrior, LatentState,
    CONDITION_LIMIT, RIDGE,
};
pub use summary::{
    equal_tailed_interval, mean, quantile_sorted, summarize, CellSummary, DiscretePoint,
    ImputationSummary,
};

use rand::Rng;

use crate::data::DataTable;
use crate::error::Result;

/// Initial latent state for `table`.
pub fn init_state(table: &DataTable) -> Result<LatentState> {
    CopulaModel::new(table)?.init_state()
}

/// One latent sweep. Prefer [`CopulaModel::sweep_latent`] in loops, which
/// avoids recomputing ranks.
pub fn sweep_latent<R: Rng + ?Sized>(state: &mut LatentState, table: &DataTable, rng: &mut R) -> Result<()> {
    CopulaModel::new(table)?.sweep_latent(state, rng)
}

pub fn update_correlation<R: Rng + ?Sized>(
    state: &mut LatentState,
    table: &DataTable,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<()> {
    let model = CopulaModel::new(table)?;
    let prior = config.prior(model.dim());
    model.update_correlation(state, &prior, rng)
}

pub fn impute_frame(state: &LatentState, table: &DataTable) -> Result<DataTable> {
    CopulaModel::new(table)?.impute_frame(state)
}
