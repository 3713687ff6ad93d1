//! Bayesian linear regression with missing values imputed inside the chain.
//!
//! Each iteration advances one shared copula chain by a single Gibbs step,
//! completes the outcome and predictors from the current latent state, and
//! then draws the regression parameters from their conjugate
//! normal–inverse-gamma posterior given that completed data:
//!
//! ```text
//! σ² | y, X ~ InvGamma(a₀ + n/2, b₀ + ½(yᵀy + m₀ᵀΛ₀m₀ − mₙᵀΛₙmₙ))
//! β | σ², y, X ~ N(mₙ, σ² Λₙ⁻¹),   Λₙ = Λ₀ + XᵀX,   mₙ = Λₙ⁻¹(Λ₀m₀ + Xᵀy)
//! ```

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::copula::{equal_tailed_interval, mean, ChainConfig, CopulaModel};
use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::kernels::{standard_normal, substream};

pub const INTERCEPT: &str = "(Intercept)";
pub const ERROR_VARIANCE: &str = "sigma2";

fn default_true() -> bool {
    true
}
fn default_precision() -> f64 {
    1e-4
}
fn default_ig() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub outcome: String,
    pub predictors: Vec<String>,
    #[serde(default = "default_true")]
    pub intercept: bool,
    /// Prior coefficient mean; zeros when absent.
    #[serde(default)]
    pub prior_mean: Option<Vec<f64>>,
    /// Diagonal of the prior precision (scaled by 1/σ²); `1e-4` each when absent.
    #[serde(default)]
    pub prior_precision: Option<Vec<f64>>,
    #[serde(default = "default_ig")]
    pub shape: f64,
    #[serde(default = "default_ig")]
    pub scale: f64,
}

impl RegressionSpec {
    pub fn new(outcome: impl Into<String>, predictors: &[&str]) -> Self {
        RegressionSpec {
            outcome: outcome.into(),
            predictors: predictors.iter().map(|s| s.to_string()).collect(),
            intercept: true,
            prior_mean: None,
            prior_precision: None,
            shape: default_ig(),
            scale: default_ig(),
        }
    }

    /// Coefficient names in draw order.
    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.predictors.iter().cloned());
        names
    }

    fn prior(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        let q = self.coefficient_names().len();
        let m0 = match &self.prior_mean {
            Some(v) if v.len() == q => DVector::from_vec(v.clone()),
            Some(v) => return Err(Error::Config(format!("prior mean has {} entries, expected {q}", v.len()))),
            None => DVector::zeros(q),
        };
        let l0 = match &self.prior_precision {
            Some(v) if v.len() == q => DVector::from_vec(v.clone()),
            Some(v) => {
                return Err(Error::Config(format!(
                    "prior precision has {} entries, expected {q}",
                    v.len()
                )))
            }
            None => DVector::from_element(q, default_precision()),
        };
        if l0.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Config("prior precision must be positive".into()));
        }
        if !(self.shape > 0.0 && self.scale > 0.0) {
            return Err(Error::Config("inverse-gamma shape and scale must be positive".into()));
        }
        Ok((m0, l0))
    }

    fn resolve(&self, table: &DataTable) -> Result<(usize, Vec<usize>)> {
        let find = |name: &str| {
            table
                .index_of(name)
                .filter(|&j| table.kind(j).is_data())
                .ok_or_else(|| Error::Config(format!("`{name}` is not a data column of the input")))
        };
        if self.predictors.is_empty() && !self.intercept {
            return Err(Error::Config("regression has no coefficients".into()));
        }
        if self.predictors.contains(&self.outcome) {
            return Err(Error::Config(format!("`{}` is both outcome and predictor", self.outcome)));
        }
        Ok((find(&self.outcome)?, self.predictors.iter().map(|p| find(p)).collect::<Result<_>>()?))
    }
}

/// Retained regression draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    /// `coefficients[d][k]`: draw `d`, coefficient `k`.
    pub coefficients: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
    pub saved_iterations: Vec<usize>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }

    /// Draws of coefficient `k`.
    pub fn coefficient(&self, k: usize) -> Vec<f64> {
        self.coefficients.iter().map(|b| b[k]).collect()
    }

    /// Long CSV: `iteration,parameter,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iteration", "parameter", "value"])?;
        for (d, it) in self.saved_iterations.iter().enumerate() {
            let it = it.to_string();
            for (k, name) in self.names.iter().enumerate() {
                w.write_record([it.as_str(), name, &self.coefficients[d][k].to_string()])?;
            }
            w.write_record([it.as_str(), ERROR_VARIANCE, &self.sigma2[d].to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))
    }
}

/// Conjugate posterior quantities for one completed dataset.
#[derive(Debug, Clone)]
struct Conjugate {
    mean: DVector<f64>,
    /// Lower Cholesky factor of the posterior precision Λₙ.
    chol: DMatrix<f64>,
    shape: f64,
    rate: f64,
}

fn conjugate(x: &DMatrix<f64>, y: &DVector<f64>, m0: &DVector<f64>, l0: &DVector<f64>, a0: f64, b0: f64) -> Result<Conjugate> {
    let mut precision = x.tr_mul(x);
    for k in 0..l0.len() {
        precision[(k, k)] += l0[k];
    }
    let chol = precision
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("posterior precision is not positive definite".into()))?;
    let prior_term = m0.component_mul(l0);
    let mean = chol.solve(&(&prior_term + x.tr_mul(y)));
    let quad = y.dot(y) + m0.dot(&prior_term) - mean.dot(&(&precision * &mean));
    Ok(Conjugate {
        mean,
        chol: chol.l(),
        shape: a0 + 0.5 * y.len() as f64,
        rate: b0 + 0.5 * quad.max(0.0),
    })
}

impl Conjugate {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(DVector<f64>, f64)> {
        let gamma = Gamma::new(self.shape, 1.0 / self.rate)
            .map_err(|e| Error::Numerical(format!("inverse-gamma draw: {e}")))?;
        let sigma2 = 1.0 / gamma.sample(rng);
        // β = mₙ + σ L⁻ᵀ z has covariance σ² (L Lᵀ)⁻¹.
        let z = DVector::from_fn(self.mean.len(), |_, _| standard_normal(rng));
        let offset = self
            .chol
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::Numerical("singular posterior precision factor".into()))?;
        Ok((&self.mean + offset * sigma2.sqrt(), sigma2))
    }
}

/// Regression Gibbs sampler with point-of-need copula imputation.
pub fn gibbs_regress(table: &DataTable, spec: &RegressionSpec, config: &ChainConfig) -> Result<PosteriorDraws> {
    let (outcome, predictors) = spec.resolve(table)?;
    let (m0, l0) = spec.prior()?;
    let model = CopulaModel::new(table)?;
    let p = model.dim();
    config.validate(p)?;
    let prior = config.prior(p);
    let copula_index = |j: usize| (0..p).find(|&k| model.table_index(k) == j).expect("data column");

    let n = table.nrows();
    let q = m0.len();
    let offset = usize::from(spec.intercept);
    let mut x = DMatrix::from_element(n, q, 1.0);
    let mut y = DVector::zeros(n);
    let fill = |dst: &mut dyn FnMut(usize, f64), j: usize| {
        for (i, v) in table.values(j).iter().enumerate() {
            if let Some(v) = v {
                dst(i, *v);
            }
        }
    };
    fill(&mut |i, v| y[i] = v, outcome);
    for (c, &j) in predictors.iter().enumerate() {
        fill(&mut |i, v| x[(i, c + offset)] = v, j);
    }
    let y_k = copula_index(outcome);
    let x_k: Vec<usize> = predictors.iter().map(|&j| copula_index(j)).collect();

    let frames = config.saved_frames();
    let mut draws = PosteriorDraws {
        names: spec.coefficient_names(),
        coefficients: Vec::with_capacity(frames),
        sigma2: Vec::with_capacity(frames),
        saved_iterations: Vec::with_capacity(frames),
    };
    let mut rng = substream(config.seed, 0);
    let mut state = model.init_state()?;
    for it in 1..=config.iterations {
        let mut step = || -> Result<(DVector<f64>, f64)> {
            model.sweep_latent(&mut state, &mut rng)?;
            model.update_correlation(&mut state, &prior, &mut rng)?;
            for &i in model.missing_rows(y_k) {
                y[i] = model.impute_value(y_k, state.z[(i, y_k)]);
            }
            for (c, &k) in x_k.iter().enumerate() {
                for &i in model.missing_rows(k) {
                    x[(i, c + offset)] = model.impute_value(k, state.z[(i, k)]);
                }
            }
            conjugate(&x, &y, &m0, &l0, spec.shape, spec.scale)?.draw(&mut rng)
        };
        let (beta, sigma2) = step().map_err(|e| Error::AtIteration {
            iteration: it,
            source: Box::new(e),
        })?;
        if it % config.thin == 0 && it / config.thin > config.burn_in {
            draws.coefficients.push(beta.iter().copied().collect());
            draws.sigma2.push(sigma2);
            draws.saved_iterations.push(it);
        }
    }
    Ok(draws)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Mean, standard deviation and equal-tailed interval of every coefficient and
/// of the error variance.
pub fn summarize_posterior(draws: &PosteriorDraws, level: f64) -> Result<Vec<ParameterSummary>> {
    if draws.len() < 2 {
        return Err(Error::Config("posterior summaries need at least two draws".into()));
    }
    let one = |name: &str, v: Vec<f64>| -> Result<ParameterSummary> {
        let m = mean(&v);
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        let (lower, upper) = equal_tailed_interval(&v, level)?;
        Ok(ParameterSummary {
            parameter: name.to_string(),
            mean: m,
            sd,
            lower,
            upper,
        })
    };
    let mut out = (0..draws.names.len())
        .map(|k| one(&draws.names[k], draws.coefficient(k)))
        .collect::<Result<Vec<_>>>()?;
    out.push(one(ERROR_VARIANCE, draws.sigma2.clone())?);
    Ok(out)
}

/// Summary CSV: `parameter,mean,sd,lower,upper`.
pub fn write_posterior_summary<W: Write>(summary: &[ParameterSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in summary {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column, ColumnKind};

    fn table() -> DataTable {
        let x: Vec<Option<f64>> = (0..30).map(|i| Some(i as f64 * 0.1)).collect();
        let y: Vec<Option<f64>> = (0..30).map(|i| Some(1.0 + 2.0 * i as f64 * 0.1 + ((i * 7) % 5) as f64 * 0.01)).collect();
        DataTable::new(vec![
            Column::numeric("x", ColumnKind::Continuous, x),
            Column::numeric("y", ColumnKind::Continuous, y),
        ])
        .unwrap()
    }

    #[test]
    fn spec_validation() {
        let t = table();
        let cfg = ChainConfig::new(10, 1, 0, 0);
        assert!(matches!(gibbs_regress(&t, &RegressionSpec::new("nope", &["x"]), &cfg), Err(Error::Config(_))));
        assert!(matches!(gibbs_regress(&t, &RegressionSpec::new("y", &["y"]), &cfg), Err(Error::Config(_))));
        let mut s = RegressionSpec::new("y", &["x"]);
        s.prior_precision = Some(vec![1.0]);
        assert!(gibbs_regress(&t, &s, &cfg).is_err());
    }

    #[test]
    fn draw_counts_and_positive_variance() {
        let d = gibbs_regress(&table(), &RegressionSpec::new("y", &["x"]), &ChainConfig::new(100, 2, 10, 3)).unwrap();
        assert_eq!(d.len(), 40);
        assert_eq!(d.names, vec![INTERCEPT.to_string(), "x".to_string()]);
        assert!(d.sigma2.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn constant_draws_give_zero_width() {
        let d = PosteriorDraws {
            names: vec!["b".into()],
            coefficients: vec![vec![2.0]; 5],
            sigma2: vec![1.0; 5],
            saved_iterations: (1..=5).collect(),
        };
        let s = summarize_posterior(&d, 0.95).unwrap();
        assert_eq!((s[0].lower, s[0].upper, s[0].mean), (2.0, 2.0, 2.0));
        assert!(summarize_posterior(&d, 1.0).is_err());
    }
}
