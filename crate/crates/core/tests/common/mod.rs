//! Fixtures and oracles shared by the integration test targets.
#![allow(dead_code)]

use copula_impute::data::Column;
use copula_impute::kernels::{standard_normal, ChainRng};
use copula_impute::{ColumnKind, DataTable};
use copula_impute::kernels::substream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Upper-tail standard normal probability, computed directly from `erfc`.
pub fn survival(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// CDF of N(mean, sd²) truncated to (lower, upper), via survival functions so
/// far upper tails keep precision.
pub fn truncnorm_cdf(x: f64, mean: f64, sd: f64, lower: f64, upper: f64) -> f64 {
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    let t = ((x - mean) / sd).clamp(a, b);
    (survival(a) - survival(t)) / (survival(a) - survival(b))
}

/// One-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at α = 0.001.
pub fn ks_critical_001(n: usize) -> f64 {
    1.9495 / (n as f64).sqrt()
}

/// Random correlation matrix of dimension `p` built from a Gaussian factor.
pub fn random_correlation(p: usize, rng: &mut ChainRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p + 2, |_, _| standard_normal(rng));
    let s = &g * g.transpose();
    DMatrix::from_fn(p, p, |i, j| s[(i, j)] / (s[(i, i)] * s[(j, j)]).sqrt())
}

/// A random mixed-type table: latent correlated normals pushed through
/// continuous, 4-level ordinal and binary margins, with cells masked at rate
/// `missing`. Every column keeps at least two distinct observed values.
pub fn random_table(n: usize, p: usize, missing: f64, rng: &mut ChainRng) -> DataTable {
    loop {
        let c = random_correlation(p, rng);
        let l = c.clone().cholesky().unwrap().l();
        let mut cols = vec![Vec::with_capacity(n); p];
        for _ in 0..n {
            let z = &l * nalgebra::DVector::from_fn(p, |_, _| standard_normal(rng));
            for j in 0..p {
                cols[j].push(z[j]);
            }
        }
        let columns: Vec<Column> = cols
            .into_iter()
            .enumerate()
            .map(|(j, zs)| {
                let kind = match j % 3 {
                    0 => ColumnKind::Continuous,
                    1 => ColumnKind::Ordinal(4),
                    _ => ColumnKind::Binary,
                };
                let values = zs
                    .iter()
                    .map(|&z| {
                        let v = match kind {
                            ColumnKind::Continuous => 3.0 * z + 10.0,
                            ColumnKind::Ordinal(_) => (z.clamp(-1.5, 1.49) + 1.5).floor(),
                            _ => f64::from(u8::from(z > 0.3)),
                        };
                        (rng.random::<f64>() >= missing).then_some(v)
                    })
                    .collect();
                Column::numeric(format!("x{j}"), kind, values)
            })
            .collect();
        let ok = columns.iter().all(|c| {
            let mut seen: Vec<f64> = c.values().unwrap().iter().flatten().copied().collect();
            seen.sort_by(f64::total_cmp);
            seen.dedup();
            seen.len() >= 2
        });
        if ok {
            return DataTable::new(columns).unwrap();
        }
    }
}

/// Correlation matrix checks: symmetric, unit diagonal, Cholesky succeeds.
pub fn is_valid_correlation(c: &DMatrix<f64>) -> bool {
    let p = c.nrows();
    c.is_square()
        && (0..p).all(|i| (c[(i, i)] - 1.0).abs() < 1e-12)
        && (0..p).all(|i| (0..p).all(|j| c[(i, j)] == c[(j, i)]))
        && c.iter().all(|v| v.is_finite() && v.abs() <= 1.0 + 1e-12)
        && c.clone().cholesky().is_some()
}

pub fn sample_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = sample_mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub const TRUE_BETA: [f64; 3] = [1.0, 2.0, -1.0];

pub fn dataset(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = substream(seed, 0);
    let mut y = Vec::new();
    let mut x1 = Vec::new();
    let mut x2 = Vec::new();
    for _ in 0..n {
        let a = standard_normal(&mut rng);
        let b = 0.5 * a + standard_normal(&mut rng);
        x1.push(a);
        x2.push(b);
        y.push(TRUE_BETA[0] + TRUE_BETA[1] * a + TRUE_BETA[2] * b + standard_normal(&mut rng));
    }
    (y, x1, x2)
}

pub fn table(y: &[f64], x1: &[Option<f64>], x2: &[f64]) -> DataTable {
    DataTable::new(vec![
        Column::numeric("y", ColumnKind::Continuous, y.iter().map(|&v| Some(v)).collect()),
        Column::numeric("x1", ColumnKind::Continuous, x1.to_vec()),
        Column::numeric("x2", ColumnKind::Continuous, x2.iter().map(|&v| Some(v)).collect()),
    ])
    .unwrap()
}

/// Posterior mean (XᵀX + Λ₀)⁻¹(Λ₀m₀ + Xᵀy) for a diagonal prior precision.
pub fn closed_form_mean(y: &[f64], x1: &[f64], x2: &[f64], m0: [f64; 3], l0: [f64; 3]) -> DVector<f64> {
    let n = y.len();
    let x = DMatrix::from_fn(n, 3, |i, k| match k {
        0 => 1.0,
        1 => x1[i],
        _ => x2[i],
    });
    let l0 = DMatrix::from_diagonal(&DVector::from_row_slice(&l0));
    let a = x.transpose() * &x + &l0;
    a.try_inverse().unwrap() * (l0 * DVector::from_row_slice(&m0) + x.transpose() * DVector::from_column_slice(y))
}

/// Standard error of a chain mean from 50 batch means.
pub fn batch_se(xs: &[f64]) -> f64 {
    let b = 50;
    let len = xs.len() / b;
    let means: Vec<f64> = (0..b).map(|k| sample_mean(&xs[k * len..(k + 1) * len])).collect();
    sample_sd(&means) / (b as f64).sqrt()
}
