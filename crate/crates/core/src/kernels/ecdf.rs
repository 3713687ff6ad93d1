use crate::error::{Error, Result};

/// Empirical marginal of one column: the tie-deduplicated observed support
/// with cumulative proportions scaled by n/(n+1), so that every proportion
/// lies strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    support: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EmpiricalMarginal {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Index of the support point returned by [`ecdf_quantile`].
    pub fn quantile_index(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c < u)
            .min(self.support.len() - 1)
    }
}

pub fn ecdf_build(observed: &[f64]) -> Result<EmpiricalMarginal> {
    if let Some(bad) = observed.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite observed value {bad}")));
    }
    let mut sorted = observed.to_vec();
    sorted.sort_by(f64::total_cmp);
    let denom = (sorted.len() + 1) as f64;
    let mut support = Vec::new();
    let mut cumulative = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if support.last() == Some(&v) {
            *cumulative.last_mut().unwrap() = (i + 1) as f64 / denom;
        } else {
            support.push(v);
            cumulative.push((i + 1) as f64 / denom);
        }
    }
    if support.len() < 2 {
        return Err(Error::Data(
            "empirical marginal needs at least two distinct values".into(),
        ));
    }
    Ok(EmpiricalMarginal { support, cumulative })
}

/// Smallest support value whose scaled cumulative proportion is at least `u`;
/// values of `u` above the last proportion map to the maximum.
pub fn ecdf_quantile(marginal: &EmpiricalMarginal, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Numerical(format!("empirical quantile undefined at {u}")));
    }
    Ok(marginal.support[marginal.quantile_index(u)])
}
