//! Imputation accuracy metrics and Rubin's-rules pooling.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::copula::{equal_tailed_interval, export::DrawMap};
use crate::data::{ColumnKind, DataTable};
use crate::error::{Error, Result};
use crate::simulation::TruthRecord;

/// Point imputations keyed by `(row, column)`.
pub type PointMap = BTreeMap<(usize, String), f64>;

/// How draws are aggregated into an error metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Every (cell, draw) pair is one error term.
    #[default]
    EachDraw,
    /// The metric is computed per cell over its draws, then averaged over cells.
    CellAverage,
}

/// A metric broken down by variable, with the unweighted mean across variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerVariable {
    pub per_variable: BTreeMap<String, f64>,
    pub overall: f64,
}

impl PerVariable {
    fn from_map(per_variable: BTreeMap<String, f64>) -> Self {
        let overall = if per_variable.is_empty() {
            f64::NAN
        } else {
            per_variable.values().sum::<f64>() / per_variable.len() as f64
        };
        PerVariable { per_variable, overall }
    }
}

fn lookup<'a>(draws: &'a DrawMap, row: usize, column: &str) -> Result<&'a [f64]> {
    draws
        .get(&(row, column.to_string()))
        .map(Vec::as_slice)
        .filter(|d| !d.is_empty())
        .ok_or_else(|| Error::Data(format!("no imputation for truth cell ({row}, {column})")))
}

fn error_metric(
    truth: &TruthRecord,
    draws: &DrawMap,
    mode: ErrorMode,
    per_term: fn(f64) -> f64,
    finish: fn(f64) -> f64,
) -> Result<PerVariable> {
    // variable -> (sum, count) for EachDraw, (sum of per-cell metrics, cells) otherwise
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for e in &truth.entries {
        let d = lookup(draws, e.row, &e.column)?;
        let terms: f64 = d.iter().map(|x| per_term(e.value - x)).sum();
        let slot = acc.entry(e.column.clone()).or_default();
        match mode {
            ErrorMode::EachDraw => {
                slot.0 += terms;
                slot.1 += d.len();
            }
            ErrorMode::CellAverage => {
                slot.0 += finish(terms / d.len() as f64);
                slot.1 += 1;
            }
        }
    }
    Ok(PerVariable::from_map(
        acc.into_iter()
            .map(|(k, (s, c))| {
                let m = s / c as f64;
                (k, if mode == ErrorMode::EachDraw { finish(m) } else { m })
            })
            .collect(),
    ))
}

/// Mean absolute error of imputations against the truth. Pass single-value
/// draw vectors to score point imputations.
pub fn mae(truth: &TruthRecord, draws: &DrawMap, mode: ErrorMode) -> Result<PerVariable> {
    error_metric(truth, draws, mode, f64::abs, |x| x)
}

pub fn rmse(truth: &TruthRecord, draws: &DrawMap, mode: ErrorMode) -> Result<PerVariable> {
    error_metric(truth, draws, mode, |e| e * e, f64::sqrt)
}

/// Wraps point imputations as one-draw vectors.
pub fn points_as_draws(points: &PointMap) -> DrawMap {
    points.iter().map(|(k, v)| (k.clone(), vec![*v])).collect()
}

/// Fraction of discrete truth cells whose point imputation equals the truth.
pub fn percent_correct(
    truth: &TruthRecord,
    points: &PointMap,
    kinds: &BTreeMap<String, ColumnKind>,
) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Data("percent correct is undefined without discrete missing cells".into()));
    }
    let mut hits = 0usize;
    for e in &truth.entries {
        match kinds.get(&e.column) {
            Some(k) if k.is_discrete() => {}
            _ => {
                return Err(Error::Data(format!(
                    "percent correct applies to ordinal/binary cells, `{}` is not one",
                    e.column
                )))
            }
        }
        let p = points
            .get(&(e.row, e.column.clone()))
            .ok_or_else(|| Error::Data(format!("no imputation for truth cell ({}, {})", e.row, e.column)))?;
        if *p == e.value {
            hits += 1;
        }
    }
    Ok(hits as f64 / truth.len() as f64)
}

/// Points from imputing every missing cell with its column's observed mode.
pub fn mode_baseline(truth: &TruthRecord, masked: &DataTable) -> Result<PointMap> {
    column_baseline(truth, masked, |obs| {
        let mut sorted = obs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut best = (sorted[0], 0usize);
        let mut i = 0;
        while i < sorted.len() {
            let run = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
            if run > best.1 {
                best = (sorted[i], run);
            }
            i += run;
        }
        best.0
    })
}

/// Points from imputing every missing cell with its column's observed mean.
pub fn mean_baseline(truth: &TruthRecord, masked: &DataTable) -> Result<PointMap> {
    column_baseline(truth, masked, |obs| obs.iter().sum::<f64>() / obs.len() as f64)
}

fn column_baseline(truth: &TruthRecord, masked: &DataTable, f: impl Fn(&[f64]) -> f64) -> Result<PointMap> {
    let mut cache: BTreeMap<String, f64> = BTreeMap::new();
    let mut out = PointMap::new();
    for e in &truth.entries {
        let v = match cache.get(&e.column) {
            Some(v) => *v,
            None => {
                let j = masked
                    .index_of(&e.column)
                    .ok_or_else(|| Error::Data(format!("unknown column `{}`", e.column)))?;
                let obs: Vec<f64> = masked.values(j).iter().flatten().copied().collect();
                let v = f(&obs);
                cache.insert(e.column.clone(), v);
                v
            }
        };
        out.insert((e.row, e.column.clone()), v);
    }
    Ok(out)
}

/// Fraction of truth cells inside the equal-tailed `level` interval of their
/// draws, per variable and pooled over all cells.
pub fn ci_coverage(truth: &TruthRecord, draws: &DrawMap, level: f64) -> Result<PerVariable> {
    let mut acc: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut hit, mut total) = (0usize, 0usize);
    for e in &truth.entries {
        let d = lookup(draws, e.row, &e.column)?;
        if d.len() < 2 {
            return Err(Error::Data("coverage needs at least two draws per cell".into()));
        }
        let (lo, hi) = equal_tailed_interval(d, level)?;
        let inside = lo <= e.value && e.value <= hi;
        let slot = acc.entry(e.column.clone()).or_default();
        slot.0 += inside as usize;
        slot.1 += 1;
        hit += inside as usize;
        total += 1;
    }
    let per_variable = acc
        .into_iter()
        .map(|(k, (h, t))| (k, h as f64 / t as f64))
        .collect();
    Ok(PerVariable {
        per_variable,
        overall: if total == 0 { f64::NAN } else { hit as f64 / total as f64 },
    })
}

/// Multiple-imputation estimate pooled by Rubin's rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledEstimate {
    pub estimate: f64,
    pub within: f64,
    pub between: f64,
    pub total: f64,
    pub m: usize,
}

pub fn rubin_pool(estimates: &[f64], variances: &[f64]) -> Result<PooledEstimate> {
    let m = estimates.len();
    if m < 2 {
        return Err(Error::Config(format!("pooling needs at least 2 imputations, got {m}")));
    }
    if variances.len() != m {
        return Err(Error::Config(format!(
            "{m} estimates but {} variances",
            variances.len()
        )));
    }
    let mf = m as f64;
    let estimate = estimates.iter().sum::<f64>() / mf;
    let within = variances.iter().sum::<f64>() / mf;
    let between = estimates.iter().map(|q| (q - estimate).powi(2)).sum::<f64>() / (mf - 1.0);
    Ok(PooledEstimate {
        estimate,
        within,
        between,
        total: within + (1.0 + 1.0 / mf) * between,
        m,
    })
}

/// Runs `f` and returns its output with the elapsed monotonic time in seconds.
pub fn time_chain<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Accuracy and timing of one imputed dataset against its truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub units: Option<usize>,
    pub periods: Option<usize>,
    pub rho: Option<f64>,
    pub level: f64,
    pub error_mode: ErrorMode,
    /// Errors over every saved draw (continuous cells).
    pub mae_all: PerVariable,
    pub rmse_all: PerVariable,
    /// Errors of the summary point (continuous cells).
    pub mae_mean: PerVariable,
    pub rmse_mean: PerVariable,
    /// Over ordinal/binary cells; `None` when there are none.
    pub percent_correct: Option<f64>,
    pub mode_baseline: Option<f64>,
    /// Interval coverage over continuous cells.
    pub coverage: PerVariable,
    pub seconds: f64,
}

/// Inputs needed to build a [`MetricsReport`].
pub struct EvaluationInput<'a> {
    pub truth: &'a TruthRecord,
    pub draws: &'a DrawMap,
    pub points: &'a PointMap,
    pub kinds: &'a BTreeMap<String, ColumnKind>,
    /// Masked input table, used for the mode baseline when present.
    pub masked: Option<&'a DataTable>,
    pub level: f64,
    pub error_mode: ErrorMode,
}

impl MetricsReport {
    pub fn compute(dataset: impl Into<String>, input: &EvaluationInput<'_>, seconds: f64) -> Result<Self> {
        let is_discrete = |c: &str| input.kinds.get(c).is_some_and(|k| k.is_discrete());
        if let Some(e) = input.truth.entries.iter().find(|e| !input.kinds.contains_key(&e.column)) {
            return Err(Error::Data(format!("truth column `{}` has no known kind", e.column)));
        }
        let split = |discrete: bool| TruthRecord {
            entries: input
                .truth
                .entries
                .iter()
                .filter(|e| is_discrete(&e.column) == discrete)
                .cloned()
                .collect(),
        };
        let continuous = split(false);
        let discrete = split(true);
        let point_draws = points_as_draws(input.points);
        let (percent, baseline) = if discrete.is_empty() {
            (None, None)
        } else {
            let pc = percent_correct(&discrete, input.points, input.kinds)?;
            let base = match input.masked {
                Some(m) => Some(percent_correct(&discrete, &mode_baseline(&discrete, m)?, input.kinds)?),
                None => None,
            };
            (Some(pc), base)
        };
        Ok(MetricsReport {
            dataset: dataset.into(),
            units: None,
            periods: None,
            rho: None,
            level: input.level,
            error_mode: input.error_mode,
            mae_all: mae(&continuous, input.draws, input.error_mode)?,
            rmse_all: rmse(&continuous, input.draws, input.error_mode)?,
            mae_mean: mae(&continuous, &point_draws, ErrorMode::EachDraw)?,
            rmse_mean: rmse(&continuous, &point_draws, ErrorMode::EachDraw)?,
            percent_correct: percent,
            mode_baseline: baseline,
            coverage: ci_coverage(&continuous, input.draws, input.level)?,
            seconds,
        })
    }

    /// Rows of `(variable, metric, value)`; variable `all` holds aggregates.
    pub fn tidy_rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        for (metric, pv) in [
            ("mae_all", &self.mae_all),
            ("rmse_all", &self.rmse_all),
            ("mae_mean", &self.mae_mean),
            ("rmse_mean", &self.rmse_mean),
            ("coverage", &self.coverage),
        ] {
            for (var, v) in &pv.per_variable {
                rows.push((var.clone(), metric.to_string(), *v));
            }
            rows.push(("all".into(), metric.to_string(), pv.overall));
        }
        if let Some(pc) = self.percent_correct {
            rows.push(("all".into(), "percent_correct".into(), pc));
        }
        if let Some(b) = self.mode_baseline {
            rows.push(("all".into(), "mode_baseline".into(), b));
        }
        rows.push(("all".into(), "seconds".into(), self.seconds));
        rows
    }
}

/// Writes reports as a tidy CSV: `dataset,variable,metric,value`.
pub fn write_tidy_csv<W: Write>(reports: &[MetricsReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dataset", "variable", "metric", "value"])?;
    for r in reports {
        for (var, metric, value) in r.tidy_rows() {
            w.write_record([r.dataset.as_str(), &var, &metric, &value.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}
