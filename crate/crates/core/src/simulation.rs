//! Synthetic time-series cross-section panels and missingness injection.
//!
//! Panels have `units × periods` rows and five variables `V1..V5`. The
//! covariance of one unit's stacked series is `Σ_var ⊗ Σ_ar1`, where `Σ_var`
//! is a random covariance across variables and `Σ_ar1` the AR(1) correlation
//! across periods. Each unit gets constant per-variable means drawn uniformly.
//! `V5` is then replaced by a Bernoulli draw with success probability
//! `Φ(standardized V1)`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnData, ColumnKind, DataTable};
use crate::error::{Error, Result};
use crate::kernels::{
    ar1_toeplitz, kronecker, norm_cdf, random_covariance, MvnSampler, SpdMatrix, DEFAULT_EIGEN_RANGE,
};

pub const VARIABLES: [&str; 5] = ["V1", "V2", "V3", "V4", "V5"];
pub const UNIT_COLUMN: &str = "unit";
pub const TIME_COLUMN: &str = "time";

/// Period lengths and autocorrelations of the full benchmark grid.
pub const GRID_PERIODS: [usize; 6] = [20, 30, 40, 50, 60, 70];
pub const GRID_RHOS: [f64; 3] = [0.75, 0.85, 0.95];

fn default_units() -> usize {
    120
}
fn default_periods() -> usize {
    20
}
fn default_rho() -> f64 {
    0.75
}
fn default_mean_ranges() -> [(f64, f64); 5] {
    [(0.0, 1.0), (0.0, 100.0), (-20.0, 20.0), (-500.0, 500.0), (0.0, 1.0)]
}
fn default_eigen_range() -> (f64, f64) {
    DEFAULT_EIGEN_RANGE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_units")]
    pub units: usize,
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Uniform bounds of the unit means of V1..V5.
    #[serde(default = "default_mean_ranges")]
    pub mean_ranges: [(f64, f64); 5],
    #[serde(default = "default_eigen_range")]
    pub eigen_range: (f64, f64),
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            units: default_units(),
            periods: default_periods(),
            rho: default_rho(),
            mean_ranges: default_mean_ranges(),
            eigen_range: default_eigen_range(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.units < 2 {
            return Err(Error::Config("simulation needs at least 2 units".into()));
        }
        if self.periods < 2 {
            return Err(Error::Config("simulation needs at least 2 periods".into()));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::Config(format!("rho {} must satisfy |rho| < 1", self.rho)));
        }
        for (v, (lo, hi)) in self.mean_ranges.iter().enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!(
                    "mean range of {} is ({lo}, {hi})",
                    VARIABLES[v]
                )));
            }
        }
        let (lo, hi) = self.eigen_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("eigen range ({lo}, {hi}) must be positive")));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.units * self.periods
    }
}

/// Generates one complete panel. Rows are unit-major with periods `1..=T`.
pub fn generate_panel<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<DataTable> {
    config.validate()?;
    let nvars = VARIABLES.len();
    let t = config.periods;
    let sigma_var = random_covariance(nvars, config.eigen_range, rng)?;
    let sigma_time = ar1_toeplitz(t, config.rho)?;
    let overall = SpdMatrix::symmetrized(kronecker(sigma_var.as_matrix(), sigma_time.as_matrix()))
        .map_err(|e| Error::Numerical(format!("overall covariance: {e}")))?;
    let sampler = MvnSampler::new(DVector::zeros(nvars * t), &overall)?;

    let n = config.rows();
    let mut values = vec![Vec::with_capacity(n); nvars];
    let mut units = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    for u in 0..config.units {
        let means: Vec<f64> = config
            .mean_ranges
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..hi) })
            .collect();
        let x = sampler.sample(rng);
        for period in 0..t {
            units.push((u + 1).to_string());
            times.push((period + 1).to_string());
            for v in 0..nvars {
                values[v].push(means[v] + x[v * t + period]);
            }
        }
    }

    let v1_std = standardize(&values[0]);
    values[4] = v1_std
        .iter()
        .map(|&z| if rng.random::<f64>() < norm_cdf(z) { 1.0 } else { 0.0 })
        .collect();

    let mut columns = vec![
        Column::label(UNIT_COLUMN, ColumnKind::UnitId, units),
        Column::label(TIME_COLUMN, ColumnKind::TimeId, times),
    ];
    for (v, vals) in values.into_iter().enumerate() {
        let kind = if v == 4 { ColumnKind::Binary } else { ColumnKind::Continuous };
        columns.push(Column::numeric(VARIABLES[v], kind, vals.into_iter().map(Some).collect()));
    }
    DataTable::new(columns)
}

/// Z-scores with the sample standard deviation; a constant input maps to zeros.
fn standardize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    x.iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect()
}

/// Missingness rule for one target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarTarget {
    pub target: String,
    pub donors: [String; 2],
    #[serde(default = "default_offset")]
    pub offset: f64,
}

fn default_offset() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MissingnessConfig {
    /// Cell `(i, target)` goes missing with probability
    /// `max(0, mean(Φ(z_donor1), Φ(z_donor2)) − offset)`, donors z-scored.
    Mar { targets: Vec<MarTarget> },
    /// Every cell of the listed columns (all data columns when absent) goes
    /// missing with a constant probability.
    Flat {
        probability: f64,
        #[serde(default)]
        columns: Option<Vec<String>>,
    },
}

impl MissingnessConfig {
    /// MAR rule over `names` where target `j` uses donors `j+1` and `j+2`
    /// (cyclically) and the default 0.3 offset.
    pub fn cyclic_mar(names: &[&str]) -> Self {
        let k = names.len();
        MissingnessConfig::Mar {
            targets: (0..k)
                .map(|j| MarTarget {
                    target: names[j].to_string(),
                    donors: [names[(j + 1) % k].to_string(), names[(j + 2) % k].to_string()],
                    offset: default_offset(),
                })
                .collect(),
        }
    }

    /// The default rule for simulated panels.
    pub fn default_mar() -> Self {
        Self::cyclic_mar(&VARIABLES)
    }

    pub fn flat(probability: f64) -> Self {
        MissingnessConfig::Flat {
            probability,
            columns: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MissingnessConfig::Mar { targets } => {
                let mut seen = HashSet::new();
                for t in targets {
                    if !(0.0..1.0).contains(&t.offset) {
                        return Err(Error::Config(format!("offset {} must lie in [0, 1)", t.offset)));
                    }
                    if t.donors.contains(&t.target) {
                        return Err(Error::Config(format!("`{}` cannot be its own donor", t.target)));
                    }
                    if !seen.insert(&t.target) {
                        return Err(Error::Config(format!("`{}` targeted twice", t.target)));
                    }
                }
            }
            MissingnessConfig::Flat { probability, .. } => {
                if !(0.0..1.0).contains(probability) {
                    return Err(Error::Config(format!(
                        "missingness probability {probability} must lie in [0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// MAR probability from the two donor CDF values.
pub fn mar_probability(donor_cdf_a: f64, donor_cdf_b: f64, offset: f64) -> f64 {
    (0.5 * (donor_cdf_a + donor_cdf_b) - offset).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub row: usize,
    pub column: String,
    pub value: f64,
}

/// True values of every injected-missing cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub entries: Vec<TruthEntry>,
}

impl TruthRecord {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Puts the recorded values back into `masked`.
    pub fn restore(&self, masked: &DataTable) -> Result<DataTable> {
        let mut columns = masked.clone().into_columns();
        for e in &self.entries {
            let col = columns
                .iter_mut()
                .find(|c| c.name == e.column)
                .ok_or_else(|| Error::Data(format!("truth column `{}` not in table", e.column)))?;
            match &mut col.data {
                ColumnData::Numeric(v) if e.row < v.len() => v[e.row] = Some(e.value),
                _ => return Err(Error::Data(format!("bad truth coordinate ({}, {})", e.row, e.column))),
            }
        }
        DataTable::new(columns)
    }

    /// CSV with header `row,column,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row", "column", "value"])?;
        for e in &self.entries {
            w.write_record([e.row.to_string(), e.column.clone(), e.value.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let entries = rdr
            .deserialize()
            .map(|r| r.map_err(|e| Error::Data(format!("truth file: {e}"))))
            .collect::<Result<Vec<TruthEntry>>>()?;
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert((e.row, e.column.as_str())) {
                return Err(Error::Data(format!("duplicate truth coordinate ({}, {})", e.row, e.column)));
            }
        }
        Ok(TruthRecord { entries })
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

fn data_column(table: &DataTable, name: &str) -> Result<usize> {
    table
        .index_of(name)
        .filter(|&j| table.kind(j).is_data())
        .ok_or_else(|| Error::Config(format!("`{name}` is not a data column")))
}

/// Masks cells according to `config` and records their true values.
///
/// Missingness probabilities are computed from the input table, so donors are
/// never affected by injections into other columns. Target values are only
/// read to record the truth of cells already chosen for masking.
pub fn inject_mar<R: Rng + ?Sized>(
    table: &DataTable,
    config: &MissingnessConfig,
    rng: &mut R,
) -> Result<(DataTable, TruthRecord)> {
    config.validate()?;
    let n = table.nrows();
    // (target column, per-row probability)
    let plan: Vec<(usize, Vec<f64>)> = match config {
        MissingnessConfig::Mar { targets } => targets
            .iter()
            .map(|t| {
                let target = data_column(table, &t.target)?;
                let donor_cdfs = t
                    .donors
                    .iter()
                    .map(|d| {
                        let j = data_column(table, d)?;
                        let vals = table
                            .values(j)
                            .iter()
                            .map(|v| {
                                v.ok_or_else(|| {
                                    Error::Data(format!("donor `{d}` must be fully observed"))
                                })
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        Ok(standardize(&vals).into_iter().map(norm_cdf).collect::<Vec<_>>())
                    })
                    .collect::<Result<Vec<_>>>()?;
                let probs = (0..n)
                    .map(|i| mar_probability(donor_cdfs[0][i], donor_cdfs[1][i], t.offset))
                    .collect();
                Ok((target, probs))
            })
            .collect::<Result<_>>()?,
        MissingnessConfig::Flat { probability, columns } => {
            let cols = match columns {
                Some(names) => names.iter().map(|n| data_column(table, n)).collect::<Result<Vec<_>>>()?,
                None => table.data_columns(),
            };
            cols.into_iter().map(|j| (j, vec![*probability; n])).collect()
        }
    };

    let mut columns = table.clone().into_columns();
    let mut truth = TruthRecord::default();
    for (j, probs) in plan {
        let name = columns[j].name.clone();
        let ColumnData::Numeric(values) = &mut columns[j].data else {
            unreachable!("data column holds numeric cells")
        };
        for (i, p) in probs.into_iter().enumerate() {
            let hit = rng.random::<f64>() < p;
            if hit {
                if let Some(v) = values[i].take() {
                    truth.entries.push(TruthEntry {
                        row: i,
                        column: name.clone(),
                        value: v,
                    });
                }
            }
        }
    }
    Ok((DataTable::new(columns)?, truth))
}
