use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};

use super::matrix::SpdMatrix;
use super::normal::standard_normal;
use crate::error::{Error, Result};

/// Draws `Σ ~ InverseWishart(df, scale)`, whose mean is
/// `scale / (df - p - 1)` when `df > p + 1`.
///
/// Uses the Bartlett decomposition of `Σ⁻¹ ~ Wishart(df, scale⁻¹)`. With
/// `scale = R Rᵀ` and Bartlett factor `A`, the draw is `M Mᵀ` where
/// `M = R A⁻ᵀ`, so no explicit inverse of the scale is formed.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    df: f64,
    scale: &SpdMatrix,
    rng: &mut R,
) -> Result<SpdMatrix> {
    let p = scale.dim();
    if !(df > (p as f64) - 1.0) || !df.is_finite() {
        return Err(Error::Numerical(format!(
            "inverse-Wishart needs df > p - 1 = {}, got {df}",
            p as f64 - 1.0
        )));
    }
    let r = scale.cholesky_lower();

    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(df - i as f64)
            .map_err(|e| Error::Numerical(format!("chi-square draw: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = standard_normal(rng);
        }
    }
    // A⁻ᵀ is upper triangular: solve Aᵀ X = I.
    let a_inv_t = a
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Numerical("singular Bartlett factor".into()))?;
    let m = r * a_inv_t;
    SpdMatrix::symmetrized(&m * m.transpose())
        .map_err(|e| Error::Numerical(format!("inverse-Wishart draw rejected: {e}")))
}
