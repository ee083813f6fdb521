//! Similarity between an original table and a synthetic one: k-marginal
//! scores, univariate and conditional comparisons, and pairwise PCA.

mod binning;
mod compare;
mod kmarginal;
mod pca;

pub use binning::{quantile_edges, Binning, Encoded, FeatureBins};
pub use compare::{
    conditional_compare, univariate_compare, ConditionalComparison, Subgroup, SubgroupWarning,
    UnivariateComparison, DEFAULT_BINS, SHARE_RATIO_WARNING,
};
pub use kmarginal::{
    baseline_score, choose_subsets, k_marginal_score, k_marginal_score_with, worst_features,
    FeatureScore, KMarginalConfig, KMarginalReport, MarginalScore, DEFAULT_HOLDOUT_FRACTION,
};
pub use pca::{compare_pca, pairwise_pca, Coercion, PcaComparison, PcaEncoding, PcaResult};

use thiserror::Error;

use crate::table::TableError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("{0}")]
    Empty(String),
    #[error("holdout of {holdout} out of {n_rows} rows leaves one side empty")]
    DegeneratePartition { n_rows: usize, holdout: usize },
    #[error("pca: {0}")]
    Pca(String),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
