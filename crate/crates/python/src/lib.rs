//! Python bindings for the copula imputation library.
//!
//! Tables and chain results are wrapped as opaque classes. Structured results
//! (summaries, metrics, posterior summaries) come back as plain dicts and lists.

use std::collections::BTreeMap;

use copula_impute::copula::export::draw_map;
use copula_impute::copula::DiscretePoint;
use copula_impute::evaluation::{rubin_pool, ErrorMode, EvaluationInput, MetricsReport};
use copula_impute::kernels::substream;
use copula_impute::regression::{gibbs_regress, summarize_posterior, RegressionSpec};
use copula_impute::simulation::{
    generate_panel, inject_mar, MissingnessConfig, SimulationConfig, TruthEntry, TruthRecord,
};
use copula_impute::{
    add_lags, read_csv, run_chain, summarize, ChainConfig, ChainResult, DataTable, ErrorClass, MissingTokens,
    Schema,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

create_exception!(copula_impute, ConfigError, PyValueError);
create_exception!(copula_impute, DataError, PyValueError);
create_exception!(copula_impute, NumericalError, PyRuntimeError);

fn to_py_err(e: copula_impute::Error) -> PyErr {
    let msg = e.to_string();
    match e.class() {
        ErrorClass::Config => ConfigError::new_err(msg),
        ErrorClass::Data => DataError::new_err(msg),
        ErrorClass::Numerical => NumericalError::new_err(msg),
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for copula_impute::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

fn value_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, value_to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

fn parse_schema(schema: Option<BTreeMap<String, String>>) -> PyResult<Schema> {
    let Some(map) = schema else {
        return Ok(Schema::default());
    };
    let json = serde_json::to_string(&map).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Schema::from_json_str(&json).or_py()
}

fn parse_error_mode(mode: &str) -> PyResult<ErrorMode> {
    match mode {
        "each_draw" | "each-draw" => Ok(ErrorMode::EachDraw),
        "cell_average" | "cell-average" => Ok(ErrorMode::CellAverage),
        other => Err(ConfigError::new_err(format!("unknown error mode `{other}`"))),
    }
}

fn parse_discrete(point: &str) -> PyResult<DiscretePoint> {
    match point {
        "mode" => Ok(DiscretePoint::Mode),
        "mean" => Ok(DiscretePoint::Mean),
        "rounded_mean" | "rounded-mean" => Ok(DiscretePoint::RoundedMean),
        other => Err(ConfigError::new_err(format!("unknown discrete point `{other}`"))),
    }
}

/// A typed data table with missing cells.
#[pyclass(name = "DataTable", module = "copula_impute", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataTable {
    inner: DataTable,
}

#[pymethods]
impl PyDataTable {
    /// Reads a CSV file. `schema` maps column names to
    /// `continuous | ordinal | binary | unit | time` and must cover every
    /// column; without it kinds are inferred.
    #[staticmethod]
    #[pyo3(signature = (path, schema=None, missing_tokens=None))]
    fn read_csv(
        path: &str,
        schema: Option<BTreeMap<String, String>>,
        missing_tokens: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let schema = parse_schema(schema)?;
        let tokens = missing_tokens.map(MissingTokens).unwrap_or_default();
        Ok(PyDataTable {
            inner: read_csv(path, &schema, &tokens).or_py()?,
        })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv_file(path).or_py()
    }

    #[getter]
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    #[getter]
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().into_iter().map(String::from).collect()
    }

    #[getter]
    fn missing_count(&self) -> usize {
        self.inner.missing_count()
    }

    /// Schema kind of every column.
    fn kinds(&self) -> BTreeMap<String, String> {
        Schema::of(&self.inner)
            .0
            .into_iter()
            .map(|(name, kind)| {
                let s = serde_json::to_value(kind)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default();
                (name, s)
            })
            .collect()
    }

    /// Numeric values of a column, `None` where missing.
    fn column(&self, name: &str) -> PyResult<Vec<Option<f64>>> {
        let j = self
            .inner
            .index_of(name)
            .ok_or_else(|| DataError::new_err(format!("no column `{name}`")))?;
        Ok(self.inner.values(j).to_vec())
    }

    /// Appends `k` within-unit lags of every data column not in `exclude`.
    #[pyo3(signature = (k, exclude=Vec::new()))]
    fn add_lags(&self, k: usize, exclude: Vec<String>) -> PyResult<Self> {
        let exclude: Vec<&str> = exclude.iter().map(String::as_str).collect();
        Ok(PyDataTable {
            inner: add_lags(&self.inner, k, &exclude).or_py()?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "DataTable({} rows, {} columns, {} missing)",
            self.inner.nrows(),
            self.inner.ncols(),
            self.inner.missing_count()
        )
    }
}

/// Saved state of a copula sampler run.
#[pyclass(name = "ChainResult", module = "copula_impute", frozen)]
struct PyChainResult {
    inner: ChainResult,
}

#[pymethods]
impl PyChainResult {
    #[getter]
    fn frame_count(&self) -> usize {
        self.inner.frame_count()
    }

    #[getter]
    fn copula_columns(&self) -> Vec<String> {
        self.inner.copula_columns().to_vec()
    }

    #[getter]
    fn seconds(&self) -> f64 {
        self.inner.duration.as_secs_f64()
    }

    /// The `k`-th completed table.
    fn frame(&self, k: usize) -> PyResult<PyDataTable> {
        Ok(PyDataTable {
            inner: self.inner.frame(k).or_py()?,
        })
    }

    /// Draws of every missing cell keyed by `(row, column)`.
    fn draws(&self) -> BTreeMap<(usize, String), Vec<f64>> {
        draw_map(&self.inner)
    }

    /// Saved correlation matrices as nested row lists.
    fn correlations(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner
            .correlations()
            .iter()
            .map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect()
    }

    /// Per-cell point imputation and equal-tailed interval.
    #[pyo3(signature = (level=0.95, discrete="mode"))]
    fn summarize(&self, py: Python<'_>, level: f64, discrete: &str) -> PyResult<Py<PyAny>> {
        let summary = summarize(&self.inner, level, parse_discrete(discrete)?).or_py()?;
        to_py(py, &summary)
    }

    /// Accuracy metrics of this run against the true values of masked cells.
    #[pyo3(signature = (truth, level=0.95, error_mode="each_draw", discrete="mode"))]
    fn evaluate(
        &self,
        py: Python<'_>,
        truth: &PyTruth,
        level: f64,
        error_mode: &str,
        discrete: &str,
    ) -> PyResult<Py<PyAny>> {
        let summary = summarize(&self.inner, level, parse_discrete(discrete)?).or_py()?;
        let draws = draw_map(&self.inner);
        let points = summary.points();
        let masked = self.inner.input();
        let kinds = (0..masked.ncols())
            .map(|j| (masked.column(j).name.clone(), masked.kind(j)))
            .collect();
        let input = EvaluationInput {
            truth: &truth.inner,
            draws: &draws,
            points: &points,
            kinds: &kinds,
            masked: Some(masked),
            level,
            error_mode: parse_error_mode(error_mode)?,
        };
        let report = MetricsReport::compute("python", &input, self.inner.duration.as_secs_f64()).or_py()?;
        to_py(py, &report)
    }
}

/// True values of the cells masked by [`inject_missing`].
#[pyclass(name = "Truth", module = "copula_impute", frozen)]
struct PyTruth {
    inner: TruthRecord,
}

#[pymethods]
impl PyTruth {
    #[new]
    fn new(entries: Vec<(usize, String, f64)>) -> Self {
        PyTruth {
            inner: TruthRecord {
                entries: entries
                    .into_iter()
                    .map(|(row, column, value)| TruthEntry { row, column, value })
                    .collect(),
            },
        }
    }

    fn entries(&self) -> Vec<(usize, String, f64)> {
        self.inner
            .entries
            .iter()
            .map(|e| (e.row, e.column.clone(), e.value))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn chain_config(
    iterations: usize,
    thin: usize,
    burn_in: usize,
    seed: u64,
    keep_columns: Option<Vec<String>>,
) -> ChainConfig {
    ChainConfig {
        keep_columns,
        ..ChainConfig::new(iterations, thin, burn_in, seed)
    }
}

/// Runs the copula Gibbs sampler. The GIL is released while sampling.
#[pyfunction]
#[pyo3(signature = (table, iterations=3000, thin=3, burn_in=500, seed=1, keep_columns=None))]
fn impute(
    py: Python<'_>,
    table: &PyDataTable,
    iterations: usize,
    thin: usize,
    burn_in: usize,
    seed: u64,
    keep_columns: Option<Vec<String>>,
) -> PyResult<PyChainResult> {
    let config = chain_config(iterations, thin, burn_in, seed, keep_columns);
    let table = &table.inner;
    let inner = py.detach(|| run_chain(table, &config, &mut |_| {})).or_py()?;
    Ok(PyChainResult { inner })
}

/// Generates a complete simulated panel.
#[pyfunction]
#[pyo3(signature = (units=20, periods=120, rho=0.85, seed=1))]
fn simulate_panel(units: usize, periods: usize, rho: f64, seed: u64) -> PyResult<PyDataTable> {
    let config = SimulationConfig {
        units,
        periods,
        rho,
        ..SimulationConfig::default()
    };
    Ok(PyDataTable {
        inner: generate_panel(&config, &mut substream(seed, 1)).or_py()?,
    })
}

/// Masks cells of `table`. With `rate` every data cell goes missing with that
/// probability; otherwise the default MAR rule over the simulated variables is
/// used.
#[pyfunction]
#[pyo3(signature = (table, seed=1, rate=None))]
fn inject_missing(table: &PyDataTable, seed: u64, rate: Option<f64>) -> PyResult<(PyDataTable, PyTruth)> {
    let config = match rate {
        Some(p) => MissingnessConfig::flat(p),
        None => MissingnessConfig::default_mar(),
    };
    let (masked, truth) = inject_mar(&table.inner, &config, &mut substream(seed, 2)).or_py()?;
    Ok((PyDataTable { inner: masked }, PyTruth { inner: truth }))
}

/// Pools per-imputation estimates and variances by Rubin's rules.
#[pyfunction]
fn pool(py: Python<'_>, estimates: Vec<f64>, variances: Vec<f64>) -> PyResult<Py<PyAny>> {
    to_py(py, &rubin_pool(&estimates, &variances).or_py()?)
}

/// Bayesian linear regression that imputes its inputs inside the chain.
/// Returns `(draws, summary)` where `draws` maps parameter names to lists.
#[pyfunction]
#[pyo3(signature = (table, outcome, predictors, iterations=3000, thin=3, burn_in=500, seed=1, level=0.95))]
#[allow(clippy::too_many_arguments)]
fn regress(
    py: Python<'_>,
    table: &PyDataTable,
    outcome: &str,
    predictors: Vec<String>,
    iterations: usize,
    thin: usize,
    burn_in: usize,
    seed: u64,
    level: f64,
) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
    let predictors: Vec<&str> = predictors.iter().map(String::as_str).collect();
    let spec = RegressionSpec::new(outcome, &predictors);
    let config = ChainConfig::new(iterations, thin, burn_in, seed);
    let table = &table.inner;
    let draws = py.detach(|| gibbs_regress(table, &spec, &config)).or_py()?;
    let summary = summarize_posterior(&draws, level).or_py()?;
    let by_name = PyDict::new(py);
    for (k, name) in draws.names.iter().enumerate() {
        by_name.set_item(name, draws.coefficient(k))?;
    }
    by_name.set_item("sigma2", draws.sigma2.clone())?;
    Ok((by_name.into_any().unbind(), to_py(py, &summary)?))
}

#[pymodule]
#[pyo3(name = "copula_impute")]
fn copula_impute_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyDataTable>()?;
    m.add_class::<PyChainResult>()?;
    m.add_class::<PyTruth>()?;
    m.add_function(wrap_pyfunction!(impute, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_panel, m)?)?;
    m.add_function(wrap_pyfunction!(inject_missing, m)?)?;
    m.add_function(wrap_pyfunction!(pool, m)?)?;
    m.add_function(wrap_pyfunction!(regress, m)?)?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("DataError", py.get_type::<DataError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    Ok(())
}
