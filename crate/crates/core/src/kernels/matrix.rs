use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::normal::standard_normal;
use crate::error::{Error, Result};

/// Default eigenvalue range for [`random_covariance`].
pub const DEFAULT_EIGEN_RANGE: (f64, f64) = (0.1, 10.0);

/// Symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    /// Checks symmetry (1e-12 relative) and positive definiteness (Cholesky).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Numerical(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("matrix has non-finite entries".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let p = m.nrows();
        for i in 0..p {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Numerical(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        if m.clone().cholesky().is_none() {
            return Err(Error::Numerical("matrix is not positive definite".into()));
        }
        Ok(SpdMatrix(m))
    }

    /// Symmetrizes `m` as (m + mᵀ)/2 before validating.
    pub fn symmetrized(m: DMatrix<f64>) -> Result<Self> {
        let sym = (&m + m.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn identity(p: usize) -> Self {
        SpdMatrix(DMatrix::identity(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Lower Cholesky factor.
    pub fn cholesky_lower(&self) -> DMatrix<f64> {
        self.0
            .clone()
            .cholesky()
            .expect("validated at construction")
            .l()
    }
}

/// Kronecker product: block (i, j) of the result is `a[(i, j)] * b`.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// AR(1) correlation matrix with entries `rho^|i-j|`.
pub fn ar1_toeplitz(t: usize, rho: f64) -> Result<SpdMatrix> {
    if t == 0 {
        return Err(Error::Config("Toeplitz dimension must be at least 1".into()));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::Config(format!("autocorrelation {rho} must satisfy |rho| < 1")));
    }
    let m = DMatrix::from_fn(t, t, |i, j| rho.powi(i.abs_diff(j) as i32));
    SpdMatrix::new(m)
}

/// Random covariance `Q diag(λ) Qᵀ`: `Q` from the QR factorization of a
/// standard Gaussian matrix, columns sign-corrected so that `R` has a positive
/// diagonal; `λ` i.i.d. uniform on `eigen_range`.
pub fn random_covariance<R: Rng + ?Sized>(
    p: usize,
    eigen_range: (f64, f64),
    rng: &mut R,
) -> Result<SpdMatrix> {
    let (lo, hi) = eigen_range;
    if p == 0 || !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Config(format!(
            "random covariance needs p >= 1 and 0 < lo <= hi, got p={p}, range=({lo}, {hi})"
        )));
    }
    let g = DMatrix::from_fn(p, p, |_, _| standard_normal(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..p {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    let lambda = DVector::from_fn(p, |_, _| lo + (hi - lo) * rng.random::<f64>());
    let m = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    SpdMatrix::symmetrized(m)
}

/// Reusable multivariate normal sampler holding the Cholesky factor.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl MvnSampler {
    pub fn new(mean: DVector<f64>, cov: &SpdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::Config(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.dim(),
                cov.dim()
            )));
        }
        Ok(MvnSampler {
            mean,
            chol: cov.cholesky_lower(),
        })
    }

    /// `mean + L z` with `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| standard_normal(rng));
        &self.mean + &self.chol * z
    }
}

pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &SpdMatrix,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(MvnSampler::new(mean.clone(), cov)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::substream;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, 0);
        DMatrix::from_fn(rows, cols, |_, _| standard_normal(&mut rng))
    }

    #[test]
    fn kronecker_identities() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert_eq!(kronecker(&i2, &i3), DMatrix::identity(6, 6));
        let b = random_matrix(2, 3, 1);
        assert_eq!(kronecker(&DMatrix::from_element(1, 1, 2.0), &b), &b * 2.0);
    }

    #[test]
    fn kronecker_block_structure() {
        let a = random_matrix(2, 3, 2);
        let b = random_matrix(3, 2, 3);
        let k = kronecker(&a, &b);
        assert_eq!(k.shape(), (6, 6));
        for i in 0..2 {
            for j in 0..3 {
                for r in 0..3 {
                    for c in 0..2 {
                        assert_eq!(k[(i * 3 + r, j * 2 + c)], a[(i, j)] * b[(r, c)]);
                    }
                }
            }
        }
    }

    #[test]
    fn toeplitz_entries() {
        let m = ar1_toeplitz(3, 0.75).unwrap();
        let m = m.as_matrix();
        assert_eq!(m[(0, 1)], 0.75);
        assert_eq!(m[(0, 2)], 0.5625);
        assert_eq!(m[(2, 1)], 0.75);
        assert_eq!(ar1_toeplitz(4, 0.0).unwrap().into_inner(), DMatrix::identity(4, 4));
        assert!(ar1_toeplitz(3, 1.0).is_err());
        assert!(ar1_toeplitz(3, -1.2).is_err());
    }

    #[test]
    fn toeplitz_positive_definite_near_unit_root() {
        let m = ar1_toeplitz(70, 0.95).unwrap();
        let eig = m.as_matrix().clone().symmetric_eigen();
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn random_covariance_eigenvalues_in_range() {
        for seed in 0..100 {
            let mut rng = substream(seed, 0);
            let c = random_covariance(5, (0.1, 10.0), &mut rng).unwrap();
            let eig = c.as_matrix().clone().symmetric_eigen().eigenvalues;
            assert!(eig.min() >= 0.1 - 1e-9 && eig.max() <= 10.0 + 1e-9, "seed {seed}: {eig}");
        }
        let mut rng = substream(9, 0);
        let s = random_covariance(1, (2.0, 3.0), &mut rng).unwrap();
        assert!((2.0..=3.0).contains(&s.as_matrix()[(0, 0)]));
    }

    #[test]
    fn mvn_identity_is_mean_plus_normals() {
        let mean = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let mut a = substream(10, 0);
        let mut b = substream(10, 0);
        let x = sample_mvn(&mean, &SpdMatrix::identity(3), &mut a).unwrap();
        let z: Vec<f64> = (0..3).map(|_| standard_normal(&mut b)).collect();
        for i in 0..3 {
            assert_eq!(x[i], mean[i] + z[i]);
        }
    }

    #[test]
    fn zero_covariance_rejected() {
        assert!(SpdMatrix::new(DMatrix::zeros(2, 2)).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SpdMatrix::new(asym).is_err());
    }

    #[test]
    fn mvn_dimension_mismatch() {
        let mut rng = substream(0, 0);
        assert!(sample_mvn(&DVector::zeros(2), &SpdMatrix::identity(3), &mut rng).is_err());
    }
}
