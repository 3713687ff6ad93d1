//! Tabular data representation shared by every other module.
//!
//! A [`DataTable`] is an immutable, rectangular set of named columns. Data
//! columns (continuous, ordinal, binary) hold `Option<f64>` cells where `None`
//! is a missing cell; identifier columns hold opaque string labels and never
//! take part in imputation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Type of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Continuous,
    /// Ordered categories; the payload is the number of distinct observed levels.
    Ordinal(usize),
    Binary,
    UnitId,
    TimeId,
}

impl ColumnKind {
    /// True for the kinds that enter the copula.
    pub fn is_data(self) -> bool {
        !matches!(self, ColumnKind::UnitId | ColumnKind::TimeId)
    }

    /// True for ordinal and binary columns (summarized by mode, scored by
    /// percent correct).
    pub fn is_discrete(self) -> bool {
        matches!(self, ColumnKind::Ordinal(_) | ColumnKind::Binary)
    }

    fn schema_name(self) -> SchemaKind {
        match self {
            ColumnKind::Continuous => SchemaKind::Continuous,
            ColumnKind::Ordinal(_) => SchemaKind::Ordinal,
            ColumnKind::Binary => SchemaKind::Binary,
            ColumnKind::UnitId => SchemaKind::Unit,
            ColumnKind::TimeId => SchemaKind::Time,
        }
    }
}

/// Column kind as spelled in a schema file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    Continuous,
    Ordinal,
    Binary,
    Unit,
    Time,
}

impl SchemaKind {
    /// Kind of the column; ordinal level counts are filled in from data.
    pub fn column_kind(self) -> ColumnKind {
        match self {
            SchemaKind::Continuous => ColumnKind::Continuous,
            SchemaKind::Ordinal => ColumnKind::Ordinal(0),
            SchemaKind::Binary => ColumnKind::Binary,
            SchemaKind::Unit => ColumnKind::UnitId,
            SchemaKind::Time => ColumnKind::TimeId,
        }
    }
}

/// Mapping from column name to kind, as read from a JSON schema file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(pub BTreeMap<String, SchemaKind>);

impl Schema {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_json_str(&text)
    }

    pub fn get(&self, name: &str) -> Option<SchemaKind> {
        self.0.get(name).copied()
    }

    /// Schema describing an existing table.
    pub fn of(table: &DataTable) -> Self {
        Schema(
            table
                .columns()
                .iter()
                .map(|c| (c.name.clone(), c.kind.schema_name()))
                .collect(),
        )
    }
}

/// Cell storage of one column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Label(Vec<String>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Label(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, kind: ColumnKind, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.into(),
            kind,
            data: ColumnData::Numeric(values),
        }
    }

    pub fn label(name: impl Into<String>, kind: ColumnKind, labels: Vec<String>) -> Self {
        Column {
            name: name.into(),
            kind,
            data: ColumnData::Label(labels),
        }
    }

    /// Numeric cells, or `None` for identifier columns.
    pub fn values(&self) -> Option<&[Option<f64>]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Label(_) => None,
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Label(v) => Some(v),
            ColumnData::Numeric(_) => None,
        }
    }
}

/// Rectangular mixed-type dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    columns: Vec<Column>,
    nrows: usize,
}

impl DataTable {
    /// Validates and builds a table.
    ///
    /// Ordinal level counts are recomputed from the observed data.
    pub fn new(mut columns: Vec<Column>) -> Result<Self> {
        let nrows = columns.first().map_or(0, |c| c.data.len());
        let mut seen = HashSet::new();
        let (mut units, mut times) = (0, 0);
        for col in &mut columns {
            if !seen.insert(col.name.clone()) {
                return Err(Error::Data(format!("duplicate column name `{}`", col.name)));
            }
            if col.data.len() != nrows {
                return Err(Error::Data(format!(
                    "column `{}` has {} cells, expected {nrows}",
                    col.name,
                    col.data.len()
                )));
            }
            match (&col.kind, &col.data) {
                (ColumnKind::UnitId, ColumnData::Label(_)) => units += 1,
                (ColumnKind::TimeId, ColumnData::Label(_)) => times += 1,
                (k, ColumnData::Numeric(values)) if k.is_data() => {
                    if let Some(bad) = values.iter().flatten().find(|v| !v.is_finite()) {
                        return Err(Error::Data(format!(
                            "column `{}` holds non-finite value {bad}",
                            col.name
                        )));
                    }
                    if nrows > 0 && values.iter().all(Option::is_none) {
                        return Err(Error::Data(format!(
                            "column `{}` is entirely missing",
                            col.name
                        )));
                    }
                    let distinct = distinct_sorted(values).len();
                    match col.kind {
                        ColumnKind::Binary if distinct > 2 => {
                            return Err(Error::Data(format!(
                                "binary column `{}` has {distinct} distinct values",
                                col.name
                            )));
                        }
                        ColumnKind::Ordinal(_) => col.kind = ColumnKind::Ordinal(distinct),
                        _ => {}
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "column `{}`: storage does not match kind {:?}",
                        col.name, col.kind
                    )))
                }
            }
        }
        if units > 1 || times > 1 {
            return Err(Error::Data("at most one unit and one time column allowed".into()));
        }
        Ok(DataTable { columns, nrows })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn kind(&self, j: usize) -> ColumnKind {
        self.columns[j].kind
    }

    /// Numeric cells of data column `j`. Panics on identifier columns.
    pub fn values(&self, j: usize) -> &[Option<f64>] {
        self.columns[j]
            .values()
            .unwrap_or_else(|| panic!("column `{}` is not numeric", self.columns[j].name))
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.columns[j].values().and_then(|v| v[i])
    }

    /// Indices of the columns that enter the copula, in table order.
    pub fn data_columns(&self) -> Vec<usize> {
        (0..self.ncols()).filter(|&j| self.kind(j).is_data()).collect()
    }

    pub fn unit_column(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == ColumnKind::UnitId)
    }

    pub fn time_column(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == ColumnKind::TimeId)
    }

    pub fn mask(&self) -> MissingMask {
        MissingMask::of(self)
    }

    pub fn missing_count(&self) -> usize {
        self.columns
            .iter()
            .filter_map(Column::values)
            .map(|v| v.iter().filter(|c| c.is_none()).count())
            .sum()
    }

    /// Returns a copy with the numeric cells of column `j` replaced.
    pub fn with_values(&self, j: usize, values: Vec<Option<f64>>) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns[j].data = ColumnData::Numeric(values);
        DataTable::new(columns)
    }

    /// Returns a copy with `f` applied to every observed cell of column `j`.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values(j).iter().map(|c| c.map(&f)).collect();
        self.with_values(j, values)
    }

    /// Returns a copy containing only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .map(|j| self.columns[j].clone())
                    .ok_or_else(|| Error::Data(format!("unknown column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        DataTable::new(columns)
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    /// Writes the table as CSV; missing cells are written as `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for i in 0..self.nrows {
            w.write_record(self.columns.iter().map(|c| match &c.data {
                ColumnData::Label(l) => l[i].clone(),
                ColumnData::Numeric(v) => v[i].map_or_else(|| "NA".to_string(), |x| x.to_string()),
            }))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Cell-level missingness indicator; `true` means missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    nrows: usize,
    ncols: usize,
    cells: Vec<bool>,
}

impl MissingMask {
    pub fn of(table: &DataTable) -> Self {
        let (nrows, ncols) = (table.nrows(), table.ncols());
        let mut cells = vec![false; nrows * ncols];
        for (j, col) in table.columns().iter().enumerate() {
            if let Some(values) = col.values() {
                for (i, v) in values.iter().enumerate() {
                    cells[j * nrows + i] = v.is_none();
                }
            }
        }
        MissingMask { nrows, ncols, cells }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.nrows + i]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&m| m).count()
    }
}

/// Missing-value tokens recognised by the CSV reader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingTokens(pub Vec<String>);

impl Default for MissingTokens {
    fn default() -> Self {
        MissingTokens(vec!["NA".into(), String::new()])
    }
}

impl MissingTokens {
    fn matches(&self, cell: &str) -> bool {
        self.0.iter().any(|t| t == cell)
    }
}

/// Reads a CSV file with a mandatory header row.
pub fn read_csv(path: impl AsRef<Path>, schema: &Schema, tokens: &MissingTokens) -> Result<DataTable> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    read_csv_from(std::io::BufReader::new(file), schema, tokens)
}

pub fn read_csv_from<R: Read>(reader: R, schema: &Schema, tokens: &MissingTokens) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() != schema.0.len() {
        return Err(Error::Config(format!(
            "schema has {} columns but the file has {}",
            schema.0.len(),
            header.len()
        )));
    }
    let kinds = header
        .iter()
        .map(|name| {
            schema
                .get(name)
                .map(SchemaKind::column_kind)
                .ok_or_else(|| Error::Config(format!("column `{name}` missing from schema")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", line + 1)))?;
        for (j, field) in record.iter().enumerate() {
            cells[j].push(field.to_string());
        }
    }

    let columns = header
        .into_iter()
        .zip(kinds)
        .zip(cells)
        .map(|((name, kind), raw)| {
            if !kind.is_data() {
                return Ok(Column::label(name, kind, raw));
            }
            let values = raw
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if tokens.matches(s) {
                        Ok(None)
                    } else {
                        s.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .map(Some)
                            .ok_or_else(|| {
                                Error::Data(format!("row {}, column `{name}`: cannot parse `{s}`", i + 1))
                            })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Column::numeric(name, kind, values))
        })
        .collect::<Result<Vec<_>>>()?;
    DataTable::new(columns)
}

/// Sorted distinct observed values of a column.
pub(crate) fn distinct_sorted(values: &[Option<f64>]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().flatten().copied().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Rank structure of one column: distinct observed values and the level of
/// each observed cell. Tied values share a level.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRanks {
    /// Sorted distinct observed values; `support[k]` is the value of level `k`.
    pub support: Vec<f64>,
    /// Level of each row, `None` for missing cells.
    pub levels: Vec<Option<usize>>,
}

impl ColumnRanks {
    pub fn level_count(&self) -> usize {
        self.support.len()
    }

    /// Observed row indices grouped by level, rows ascending within a level.
    pub fn rows_by_level(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.support.len()];
        for (i, lvl) in self.levels.iter().enumerate() {
            if let Some(k) = lvl {
                groups[*k].push(i);
            }
        }
        groups
    }
}

pub fn compute_ranks(table: &DataTable, j: usize) -> Result<ColumnRanks> {
    let col = table.column(j);
    let values = col
        .values()
        .filter(|_| col.kind.is_data())
        .ok_or_else(|| Error::Data(format!("column `{}` is not a data column", col.name)))?;
    let support = distinct_sorted(values);
    if support.len() < 2 {
        return Err(Error::DegenerateColumn(col.name.clone()));
    }
    let levels = values
        .iter()
        .map(|c| {
            c.map(|x| {
                support
                    .binary_search_by(|s| s.total_cmp(&x))
                    .expect("observed value is in its own support")
            })
        })
        .collect();
    Ok(ColumnRanks { support, levels })
}

/// Appends `k` lag columns for every data column not listed in `exclude`.
///
/// Time labels must parse as integers. The lag-`l` cell at (unit, t) holds the
/// value at (unit, t - l), or is missing when that period is absent.
pub fn add_lags(table: &DataTable, k: usize, exclude: &[&str]) -> Result<DataTable> {
    if k == 0 {
        return Err(Error::Config("lag count must be at least 1".into()));
    }
    let unit_col = table
        .unit_column()
        .ok_or_else(|| Error::Data("lagging requires a unit identifier column".into()))?;
    let time_col = table
        .time_column()
        .ok_or_else(|| Error::Data("lagging requires a time identifier column".into()))?;
    for name in exclude {
        if table.index_of(name).is_none() {
            return Err(Error::Config(format!("excluded column `{name}` does not exist")));
        }
    }
    let units = table.column(unit_col).labels().expect("unit column holds labels");
    let times = table
        .column(time_col)
        .labels()
        .expect("time column holds labels")
        .iter()
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Data(format!("time label `{t}` is not an integer")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut index: HashMap<(&str, i64), usize> = HashMap::with_capacity(table.nrows());
    for (i, (u, &t)) in units.iter().zip(&times).enumerate() {
        if index.insert((u.as_str(), t), i).is_some() {
            return Err(Error::Data(format!("duplicate (unit, time) pair ({u}, {t})")));
        }
    }

    let mut columns = table.columns().to_vec();
    for j in table.data_columns() {
        let col = table.column(j);
        if exclude.contains(&col.name.as_str()) {
            continue;
        }
        let values = table.values(j);
        for lag in 1..=k {
            let lagged = (0..table.nrows())
                .map(|i| {
                    index
                        .get(&(units[i].as_str(), times[i] - lag as i64))
                        .and_then(|&src| values[src])
                })
                .collect();
            columns.push(Column::numeric(format!("{}_lag{lag}", col.name), col.kind, lagged));
        }
    }
    DataTable::new(columns)
}
