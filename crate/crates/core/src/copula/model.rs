//! Extended-rank-likelihood Gaussian copula: latent state and Gibbs steps.
//!
//! Each copula column `j` has latent scores `Z[·, j]` whose ordering must agree
//! with the ordering of the observed data. An observed cell at rank level `r`
//! is constrained to lie above every latent score at level `r - 1` and below
//! every score at level `r + 1`; missing cells are unconstrained. The latent
//! rows are jointly `N(0, C)` with `C` a correlation matrix.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::data::{compute_ranks, Column, DataTable};
use crate::error::{Error, Result};
use crate::kernels::{
    ecdf_build, norm_cdf, norm_quantile, sample_inverse_wishart, sample_truncnorm,
    standard_normal, EmpiricalMarginal, SpdMatrix,
};

/// Condition number above which the correlation is ridged before use.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Ridge added to the diagonal of an ill-conditioned correlation.
pub const RIDGE: f64 = 1e-8;

/// Latent Gaussian scores and the current correlation draw.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    /// `n × p` latent matrix; column `k` belongs to the `k`-th copula column.
    pub z: DMatrix<f64>,
    /// `p × p` correlation matrix.
    pub c: DMatrix<f64>,
    pub iteration: usize,
}

/// Conjugate prior on the latent covariance: `InverseWishart(df, scale · I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPrior {
    pub df: f64,
    pub scale: f64,
}

impl CorrelationPrior {
    /// `df = p + 2`, `scale = df`.
    pub fn default_for(p: usize) -> Self {
        let df = p as f64 + 2.0;
        CorrelationPrior { df, scale: df }
    }
}

#[derive(Debug, Clone)]
struct ColumnModel {
    /// Index of the column in the source table.
    table_index: usize,
    /// Observed rows grouped by ascending rank level.
    levels: Vec<Vec<usize>>,
    missing: Vec<usize>,
    marginal: EmpiricalMarginal,
}

/// Rank structure and marginals of every copula column of a table,
/// precomputed once per chain.
#[derive(Debug, Clone)]
pub struct CopulaModel {
    table: DataTable,
    columns: Vec<ColumnModel>,
}

impl CopulaModel {
    pub fn new(table: &DataTable) -> Result<Self> {
        let data_cols = table.data_columns();
        if data_cols.is_empty() {
            return Err(Error::Data("table has no data columns".into()));
        }
        let columns = data_cols
            .into_iter()
            .map(|j| {
                let ranks = compute_ranks(table, j)?;
                let observed: Vec<f64> = table.values(j).iter().flatten().copied().collect();
                let missing = table
                    .values(j)
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| v.is_none().then_some(i))
                    .collect();
                Ok(ColumnModel {
                    table_index: j,
                    levels: ranks.rows_by_level(),
                    missing,
                    marginal: ecdf_build(&observed)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CopulaModel {
            table: table.clone(),
            columns,
        })
    }

    pub fn table(&self) -> &DataTable {
        &self.table
    }

    /// Number of copula columns.
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn nrows(&self) -> usize {
        self.table.nrows()
    }

    /// Table index of the `k`-th copula column.
    pub fn table_index(&self, k: usize) -> usize {
        self.columns[k].table_index
    }

    pub fn marginal(&self, k: usize) -> &EmpiricalMarginal {
        &self.columns[k].marginal
    }

    pub fn missing_rows(&self, k: usize) -> &[usize] {
        &self.columns[k].missing
    }

    /// Normal scores of scaled mid-ranks for observed cells, zero for missing
    /// cells, identity correlation.
    pub fn init_state(&self) -> Result<LatentState> {
        let (n, p) = (self.nrows(), self.dim());
        let mut z = DMatrix::zeros(n, p);
        for (k, col) in self.columns.iter().enumerate() {
            let n_obs: usize = col.levels.iter().map(Vec::len).sum();
            let denom = (n_obs + 1) as f64;
            let mut below = 0usize;
            for rows in &col.levels {
                // Average of ranks below+1 ..= below+len.
                let mid_rank = below as f64 + (rows.len() as f64 + 1.0) / 2.0;
                let score = norm_quantile(mid_rank / denom)?;
                for &i in rows {
                    z[(i, k)] = score;
                }
                below += rows.len();
            }
        }
        Ok(LatentState {
            z,
            c: DMatrix::identity(p, p),
            iteration: 0,
        })
    }

    /// One Gibbs pass over every latent cell.
    ///
    /// Columns are visited in order. Within a column, observed cells are
    /// visited by ascending rank level (rows ascending inside a level), then
    /// missing cells by ascending row. Cells sharing a level are conditionally
    /// independent given the rest, so this is a valid sequential scan.
    pub fn sweep_latent<R: Rng + ?Sized>(&self, state: &mut LatentState, rng: &mut R) -> Result<()> {
        let p = self.dim();
        let n = self.nrows();
        guard_conditioning(&mut state.c);
        let precision = state
            .c
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("correlation matrix is not positive definite".into()))?
            .inverse();

        let mut mu = vec![0.0; n];
        for (j, col) in self.columns.iter().enumerate() {
            let pjj = precision[(j, j)];
            let sd = (1.0 / pjj).sqrt();
            mu.iter_mut().for_each(|m| *m = 0.0);
            for k in (0..p).filter(|&k| k != j) {
                let coef = -precision[(k, j)] / pjj;
                if coef != 0.0 {
                    let zk = &state.z.as_slice()[k * n..(k + 1) * n];
                    for (m, zk) in mu.iter_mut().zip(zk) {
                        *m += coef * zk;
                    }
                }
            }

            let zj = &mut state.z.as_mut_slice()[j * n..(j + 1) * n];
            let mut lower = f64::NEG_INFINITY;
            for (r, rows) in col.levels.iter().enumerate() {
                let upper = col
                    .levels
                    .get(r + 1)
                    .map_or(f64::INFINITY, |next| {
                        next.iter().map(|&i| zj[i]).fold(f64::INFINITY, f64::min)
                    });
                let mut level_max = f64::NEG_INFINITY;
                for &i in rows {
                    let v = sample_truncnorm(mu[i], sd, lower, upper, rng)?;
                    zj[i] = v;
                    level_max = level_max.max(v);
                }
                lower = level_max;
            }
            for &i in &col.missing {
                zj[i] = mu[i] + sd * standard_normal(rng);
            }
        }
        Ok(())
    }

    /// Draws `Σ ~ IW(df₀ + n, scale₀·I + ZᵀZ)` and rescales it to a
    /// correlation matrix.
    pub fn update_correlation<R: Rng + ?Sized>(
        &self,
        state: &mut LatentState,
        prior: &CorrelationPrior,
        rng: &mut R,
    ) -> Result<()> {
        let p = self.dim();
        let mut scale = state.z.tr_mul(&state.z);
        for d in 0..p {
            scale[(d, d)] += prior.scale;
        }
        let scale = SpdMatrix::symmetrized(scale)?;
        let sigma = sample_inverse_wishart(prior.df + self.nrows() as f64, &scale, rng)?;
        state.c = to_correlation(sigma.as_matrix());
        state.iteration += 1;
        Ok(())
    }

    /// Imputed value for missing cell `(row, k)` given latent score `z`.
    pub fn impute_value(&self, k: usize, z: f64) -> f64 {
        let m = &self.columns[k].marginal;
        m.support()[m.quantile_index(norm_cdf(z))]
    }

    /// Completed table: observed cells verbatim, missing cells mapped through
    /// the empirical marginal quantile of `Φ(Z)`.
    pub fn impute_frame(&self, state: &LatentState) -> Result<DataTable> {
        let mut columns: Vec<Column> = self.table.columns().to_vec();
        for (k, col) in self.columns.iter().enumerate() {
            let mut values = self.table.values(col.table_index).to_vec();
            for &i in &col.missing {
                values[i] = Some(self.impute_value(k, state.z[(i, k)]));
            }
            columns[col.table_index] = Column::numeric(
                columns[col.table_index].name.clone(),
                columns[col.table_index].kind,
                values,
            );
        }
        DataTable::new(columns)
    }

    /// Brute-force check that latent ordering agrees with observed ranks.
    pub fn rank_consistent(&self, state: &LatentState) -> bool {
        self.columns.iter().enumerate().all(|(k, col)| {
            col.levels.windows(2).all(|pair| {
                let below = pair[0].iter().map(|&i| state.z[(i, k)]).fold(f64::NEG_INFINITY, f64::max);
                let above = pair[1].iter().map(|&i| state.z[(i, k)]).fold(f64::INFINITY, f64::min);
                below < above
            })
        })
    }
}

/// `D^{-1/2} Σ D^{-1/2}` with exact unit diagonal.
pub(crate) fn to_correlation(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let p = sigma.nrows();
    let inv_sd = DVector::from_fn(p, |i, _| 1.0 / sigma[(i, i)].sqrt());
    let mut c = DMatrix::from_fn(p, p, |i, j| sigma[(i, j)] * inv_sd[i] * inv_sd[j]);
    for i in 0..p {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Ridges and renormalizes `c` in place when its condition number exceeds
/// [`CONDITION_LIMIT`]. Returns whether the ridge was applied.
pub fn guard_conditioning(c: &mut DMatrix<f64>) -> bool {
    if c.nrows() < 2 || condition_number(c) <= CONDITION_LIMIT {
        return false;
    }
    for d in 0..c.nrows() {
        c[(d, d)] += RIDGE;
    }
    *c = to_correlation(c);
    true
}

/// Regression of latent column `j` on the others under correlation `c`:
/// coefficients `C₋ⱼ₋ⱼ⁻¹ C₋ⱼⱼ` (ordered by column index, skipping `j`) and
/// residual variance `1 − Cⱼ₋ⱼ C₋ⱼ₋ⱼ⁻¹ C₋ⱼⱼ`.
pub fn conditional_params(c: &DMatrix<f64>, j: usize) -> Result<(Vec<f64>, f64)> {
    let p = c.nrows();
    if j >= p || !c.is_square() {
        return Err(Error::Config(format!("column {j} out of range for {p}x{p} matrix")));
    }
    if p == 1 {
        return Ok((Vec::new(), 1.0));
    }
    let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
    let sub = DMatrix::from_fn(p - 1, p - 1, |a, b| c[(others[a], others[b])]);
    let cross = DVector::from_fn(p - 1, |a, _| c[(others[a], j)]);
    let cond = condition_number(&sub);
    if cond > CONDITION_LIMIT {
        return Err(Error::Numerical(format!(
            "conditioning matrix for column {j} has condition number {cond:.3e}"
        )));
    }
    let chol = sub
        .cholesky()
        .ok_or_else(|| Error::Numerical("conditioning matrix not positive definite".into()))?;
    let coef = chol.solve(&cross);
    let var = 1.0 - cross.dot(&coef);
    if !(var > 0.0) {
        return Err(Error::Numerical(format!("non-positive residual variance {var}")));
    }
    Ok((coef.iter().copied().collect(), var.min(1.0)))
}
