use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::table::{ColumnData, ColumnKind, Table};

/// How one feature is discretised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureBins {
    /// One bin per category label of the reference table.
    Categorical { name: String, labels: Vec<String> },
    /// Bin `i` holds values in `[edges[i-1], edges[i])`; NaN gets its own bin.
    Numeric { name: String, edges: Vec<f64> },
}

impl FeatureBins {
    pub fn name(&self) -> &str {
        match self {
            FeatureBins::Categorical { name, .. } | FeatureBins::Numeric { name, .. } => name,
        }
    }
}

/// Bin geometry taken from a reference (original) table and applied to any
/// table with the same columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub n_bins: usize,
    pub features: Vec<FeatureBins>,
}

/// Interior quantile edges of the finite values, duplicates collapsed.
pub fn quantile_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mut edges: Vec<f64> = (1..n_bins).map(|j| v[(j * n / n_bins).min(n - 1)]).collect();
    edges.dedup();
    edges
}

#[inline]
pub(crate) fn numeric_bin(edges: &[f64], x: f64) -> u32 {
    if x.is_nan() {
        edges.len() as u32 + 1
    } else {
        edges.partition_point(|&e| e <= x) as u32
    }
}

/// Per-feature bin codes for the tables passed to [`Binning::encode`].
#[derive(Debug, Clone)]
pub struct Encoded {
    /// `codes[table][feature][row]`.
    pub codes: Vec<Vec<Vec<u32>>>,
    /// Number of distinct codes per feature.
    pub cardinality: Vec<u64>,
    /// Labels per feature and code.
    pub labels: Vec<Vec<String>>,
}

impl Binning {
    pub fn from_table(reference: &Table, n_bins: usize) -> Result<Binning> {
        if n_bins < 2 {
            return Err(EvalError::Config("n_bins must be at least 2".into()));
        }
        let features = (0..reference.n_cols())
            .map(|c| {
                let s = reference.column_schema(c);
                match reference.column(c) {
                    ColumnData::Categorical(_) => FeatureBins::Categorical {
                        name: s.name.clone(),
                        labels: s.categories.clone(),
                    },
                    ColumnData::Numeric(v) => FeatureBins::Numeric {
                        name: s.name.clone(),
                        edges: quantile_edges(v, n_bins),
                    },
                }
            })
            .collect();
        Ok(Binning { n_bins, features })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name().to_string()).collect()
    }

    /// Encodes several tables with shared codes. Categories the reference did
    /// not have get fresh codes shared across all tables.
    pub fn encode(&self, tables: &[&Table]) -> Result<Encoded> {
        for t in tables {
            check_columns(self, t)?;
        }
        let mut codes: Vec<Vec<Vec<u32>>> = vec![Vec::with_capacity(self.features.len()); tables.len()];
        let mut cardinality = Vec::with_capacity(self.features.len());
        let mut all_labels = Vec::with_capacity(self.features.len());
        for (f, bins) in self.features.iter().enumerate() {
            match bins {
                FeatureBins::Categorical { labels, .. } => {
                    let mut labels = labels.clone();
                    let mut index: HashMap<String, u32> =
                        labels.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
                    for (ti, t) in tables.iter().enumerate() {
                        let cats = &t.column_schema(f).categories;
                        let map: Vec<u32> = cats
                            .iter()
                            .map(|c| {
                                *index.entry(c.clone()).or_insert_with(|| {
                                    labels.push(c.clone());
                                    (labels.len() - 1) as u32
                                })
                            })
                            .collect();
                        let ColumnData::Categorical(v) = t.column(f) else {
                            unreachable!("kinds checked")
                        };
                        codes[ti].push(v.iter().map(|&c| map[c as usize]).collect());
                    }
                    cardinality.push(labels.len().max(1) as u64);
                    all_labels.push(labels);
                }
                FeatureBins::Numeric { edges, .. } => {
                    for (ti, t) in tables.iter().enumerate() {
                        let ColumnData::Numeric(v) = t.column(f) else {
                            unreachable!("kinds checked")
                        };
                        codes[ti].push(v.iter().map(|&x| numeric_bin(edges, x)).collect());
                    }
                    cardinality.push(edges.len() as u64 + 2);
                    all_labels.push(numeric_labels(edges));
                }
            }
        }
        Ok(Encoded {
            codes,
            cardinality,
            labels: all_labels,
        })
    }
}

pub(crate) fn numeric_labels(edges: &[f64]) -> Vec<String> {
    let mut out = Vec::with_capacity(edges.len() + 2);
    let fmt = |x: f64| format!("{x}");
    if edges.is_empty() {
        out.push("(-inf, inf)".to_string());
    } else {
        out.push(format!("(-inf, {})", fmt(edges[0])));
        for w in edges.windows(2) {
            out.push(format!("[{}, {})", fmt(w[0]), fmt(w[1])));
        }
        out.push(format!("[{}, inf)", fmt(edges[edges.len() - 1])));
    }
    out.push("NaN".to_string());
    out
}

fn check_columns(binning: &Binning, t: &Table) -> Result<()> {
    if t.n_cols() != binning.features.len() {
        return Err(EvalError::SchemaMismatch(format!(
            "expected {} columns, found {}",
            binning.features.len(),
            t.n_cols()
        )));
    }
    for (f, bins) in binning.features.iter().enumerate() {
        let s = t.column_schema(f);
        let expected = match bins {
            FeatureBins::Categorical { .. } => ColumnKind::Categorical,
            FeatureBins::Numeric { .. } => ColumnKind::Numeric,
        };
        if s.name != bins.name() || s.kind != expected {
            return Err(EvalError::SchemaMismatch(format!(
                "column {f}: expected {} ({expected}), found {} ({})",
                bins.name(),
                s.name,
                s.kind
            )));
        }
    }
    Ok(())
}
