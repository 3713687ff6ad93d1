//! Semiparametric Gaussian-copula multiple imputation.
//!
//! The copula sampler treats every data column through its ranks only: latent
//! Gaussian scores are kept consistent with the observed ordering, their
//! correlation is updated by a conjugate inverse-Wishart step, and missing
//! cells are filled by mapping latent draws through each column's empirical
//! quantile function. Continuous, ordinal and binary columns share one code
//! path.
//!
//! Besides the sampler the crate carries the tooling around it: a
//! panel-data simulator with MAR missingness injection, accuracy metrics and
//! Rubin's-rules pooling, and a Bayesian linear regression that imputes its
//! inputs inside its own chain.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copula;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod regression;
pub mod simulation;

pub use copula::{run_chain, summarize, ChainConfig, ChainResult, ImputationSummary};
pub use data::{add_lags, compute_ranks, read_csv, ColumnKind, DataTable, MissingTokens, Schema};
pub use error::{Error, ErrorClass, Result};
