use serde::{Deserialize, Serialize};

use super::chain::ChainResult;
use crate::error::{Error, Result};

/// Point summary used for ordinal and binary cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscretePoint {
    /// Most frequent draw; ties go to the smallest value.
    #[default]
    Mode,
    /// Plain mean of the draws, not snapped to the support.
    Mean,
    /// Mean rounded to the nearest observed support level.
    RoundedMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub row: usize,
    pub column: String,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationSummary {
    pub level: f64,
    pub cells: Vec<CellSummary>,
}

impl ImputationSummary {
    /// Point imputations keyed by `(row, column name)`.
    pub fn points(&self) -> std::collections::BTreeMap<(usize, String), f64> {
        self.cells.iter().map(|c| ((c.row, c.column.clone()), c.point)).collect()
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("interval level {level} must lie in (0, 1)")))
    }
}

/// Empirical quantile of sorted data with linear interpolation between order
/// statistics (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed `level` interval of `draws`.
pub fn equal_tailed_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if draws.is_empty() {
        return Err(Error::Data("no draws to summarize".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mode(draws: &[f64]) -> f64 {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut best, mut best_count) = (sorted[0], 0);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        if j > best_count {
            best = sorted[i];
            best_count = j;
        }
        i += j;
    }
    best
}

/// Per-missing-cell posterior summaries of a chain.
///
/// Continuous cells use the draw mean; ordinal and binary cells use
/// `discrete`. Intervals are equal-tailed at `level`.
pub fn summarize(chain: &ChainResult, level: f64, discrete: DiscretePoint) -> Result<ImputationSummary> {
    check_level(level)?;
    if chain.frame_count() < 2 {
        return Err(Error::Config("summaries need at least two saved frames".into()));
    }
    let table = chain.input();
    let cells = chain
        .cells()
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let draws = chain.cell_draws(c);
            let col = table.column(cell.column);
            let point = if col.kind.is_discrete() {
                match discrete {
                    DiscretePoint::Mode => mode(&draws),
                    DiscretePoint::Mean => mean(&draws),
                    DiscretePoint::RoundedMean => {
                        let m = mean(&draws);
                        nearest_support(table.values(cell.column), m)
                    }
                }
            } else {
                mean(&draws)
            };
            let (lower, upper) = equal_tailed_interval(&draws, level)?;
            Ok(CellSummary {
                row: cell.row,
                column: col.name.clone(),
                point,
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImputationSummary { level, cells })
}

fn nearest_support(values: &[Option<f64>], x: f64) -> f64 {
    values
        .iter()
        .flatten()
        .copied()
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()).then(a.total_cmp(b)))
        .expect("column has observed values")
}
