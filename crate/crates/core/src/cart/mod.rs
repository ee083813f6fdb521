//! Sequential CART synthesis.
//!
//! Columns are generated one at a time in a configured visit order. The first
//! column is a (weighted) bootstrap of its observed marginal; every later
//! column gets a tree fitted on the original data with the earlier columns as
//! predictors, and each synthetic row is routed down that tree and assigned a
//! value drawn from the leaf's donor pool.

mod audit;
mod synth;
mod tree;

pub use audit::{exact_match_audit, MatchAudit};
pub use synth::{
    synthesize, ColumnMode, ConsistencyReport, ConsistencyRule, SynthesisConfig, SynthesisModel,
    SynthesisOutput, MODEL_SCHEMA_VERSION,
};
pub use tree::{fit_tree, DecisionTree, DonorValues, Leaf, LeafId, Node, SplitForm, SplitRule};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::TableError;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("column {column}: {n_rows} rows is fewer than min_leaf = {min_leaf}")]
    TooFewRows {
        column: String,
        n_rows: usize,
        min_leaf: usize,
    },
    #[error("row does not supply predictor {0}")]
    MissingPredictor(String),
    #[error(
        "consistency rule {rule:?} could not be satisfied for {failed} of {n_rows} rows (limit is 1%)"
    )]
    ConsistencyAbort {
        rule: String,
        failed: usize,
        n_rows: usize,
    },
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

/// Tree growth limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// Smallest allowed donor pool.
    pub min_leaf: usize,
    pub max_depth: usize,
    pub min_impurity_decrease: f64,
    pub max_numeric_split_candidates: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: 5,
            max_depth: 30,
            min_impurity_decrease: 0.0,
            max_numeric_split_candidates: 256,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf < 1 {
            return Err(SynthError::Config("min_leaf must be at least 1".into()));
        }
        if self.max_depth < 1 {
            return Err(SynthError::Config("max_depth must be at least 1".into()));
        }
        if self.min_impurity_decrease.is_nan() || self.min_impurity_decrease < 0.0 {
            return Err(SynthError::Config(
                "min_impurity_decrease must be non-negative".into(),
            ));
        }
        if self.max_numeric_split_candidates < 1 {
            return Err(SynthError::Config(
                "max_numeric_split_candidates must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
