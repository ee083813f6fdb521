//! Tabular microdata synthesis and evaluation.
//!
//! * [`table`]: columnar tables, CSV ingestion, recodes, filters, summaries.
//! * [`cart`]: sequential CART synthesis and the exact-match audit.
//! * [`eval`]: k-marginal scores, univariate/conditional comparisons, PCA.
//! * [`econ`]: OLS/logit fits and confidence-interval overlap comparison.

pub mod table;
pub mod cart;
pub mod rng;
pub mod eval;
pub mod econ;
