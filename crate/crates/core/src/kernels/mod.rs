//! Numerical primitives used by the sampler and the simulation harness.

mod ecdf;
mod matrix;
mod normal;
mod rng;
mod truncnorm;
mod wishart;

pub use ecdf::{ecdf_build, ecdf_quantile, EmpiricalMarginal};
pub use matrix::{
    ar1_toeplitz, kronecker, random_covariance, sample_mvn, MvnSampler, SpdMatrix,
    DEFAULT_EIGEN_RANGE,
};
pub use normal::{norm_cdf, norm_pdf, norm_quantile, standard_normal};
pub use rng::{substream, ChainRng};
pub use truncnorm::sample_truncnorm;
pub use wishart::sample_inverse_wishart;
