use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::table::{parse_decimal, ColumnData, Table};

/// How a column was turned into numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Coercion {
    Numeric,
    /// Every label parses as a number; that number is used.
    LabelValue,
    /// Position in the declared category order.
    CategoryIndex { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaEncoding {
    /// Features entering the decomposition, in matrix order.
    pub features: Vec<String>,
    pub coercions: Vec<Coercion>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Zero-variance features left out of the decomposition.
    pub dropped_features: Vec<String>,
    pub n_rows_used: usize,
    /// Rows with a missing (NaN) value in any feature.
    pub n_rows_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub encoding: PcaEncoding,
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvalues[i] / Σ eigenvalues`.
    pub variance_shares: Vec<f64>,
    pub n_components: usize,
    /// `loadings[c][f]`: eigenvector of component `c`.
    pub loadings: Vec<Vec<f64>>,
    /// `scores[row][c]` for the top components; row `i` is the `i`-th used row.
    #[serde(skip)]
    pub scores: Vec<Vec<f64>>,
    /// Indices of the source rows behind `scores`.
    #[serde(skip)]
    pub rows: Vec<usize>,
    pub warnings: Vec<String>,
}

impl PcaResult {
    pub fn top_shares(&self) -> &[f64] {
        &self.variance_shares[..self.n_components]
    }

    /// All component pairs `(i, j)` with `i < j` among the top components.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_components;
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    /// 2D coordinates of every used row on components `i` and `j`.
    pub fn projection(&self, i: usize, j: usize) -> Vec<(f64, f64)> {
        self.scores.iter().map(|s| (s[i], s[j])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaComparison {
    pub original: PcaResult,
    pub synthetic: PcaResult,
    /// Synthetic minus original share for each top component.
    pub share_differences: Vec<f64>,
}

fn coerce(t: &Table, c: usize) -> (Vec<f64>, Coercion) {
    match t.column(c) {
        ColumnData::Numeric(v) => (v.clone(), Coercion::Numeric),
        ColumnData::Categorical(v) => {
            let cats = &t.column_schema(c).categories;
            let values: Option<Vec<f64>> = cats.iter().map(|l| parse_decimal(l)).collect();
            match values {
                Some(vals) => (v.iter().map(|&k| vals[k as usize]).collect(), Coercion::LabelValue),
                None => (
                    v.iter().map(|&k| f64::from(k)).collect(),
                    Coercion::CategoryIndex {
                        categories: cats.clone(),
                    },
                ),
            }
        }
    }
}

fn mean_sd(v: &[f64], rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&r| v[r]).sum::<f64>() / n;
    let ss: f64 = rows.iter().map(|&r| (v[r] - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Principal components of one table's correlation matrix. Every column is a
/// feature except the weight column.
pub fn pairwise_pca(t: &Table, n_components: usize) -> Result<PcaResult> {
    if n_components == 0 {
        return Err(EvalError::Config("n_components must be at least 1".into()));
    }
    let weight = t.weight_column().and_then(|w| t.index_of(w));
    let candidates: Vec<usize> = (0..t.n_cols()).filter(|&c| Some(c) != weight).collect();
    let coerced: Vec<(Vec<f64>, Coercion)> = candidates.par_iter().map(|&c| coerce(t, c)).collect();

    let rows: Vec<usize> = (0..t.n_rows())
        .filter(|&r| coerced.iter().all(|(v, _)| !v[r].is_nan()))
        .collect();
    let n_rows_dropped = t.n_rows() - rows.len();
    if rows.len() <= n_components || rows.len() < 2 {
        return Err(EvalError::Pca(format!(
            "{} usable rows is not more than {n_components} components",
            rows.len()
        )));
    }

    let mut enc = PcaEncoding {
        features: Vec::new(),
        coercions: Vec::new(),
        means: Vec::new(),
        sds: Vec::new(),
        dropped_features: Vec::new(),
        n_rows_used: rows.len(),
        n_rows_dropped,
    };
    let mut warnings = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (&c, (v, how)) in candidates.iter().zip(coerced) {
        let name = &t.column_schema(c).name;
        let (mean, sd) = mean_sd(&v, &rows);
        if !sd.is_finite() || sd <= 0.0 {
            warnings.push(format!("dropped zero-variance feature {name}"));
            enc.dropped_features.push(name.clone());
            continue;
        }
        columns.push(rows.iter().map(|&r| (v[r] - mean) / sd).collect());
        enc.features.push(name.clone());
        enc.coercions.push(how);
        enc.means.push(mean);
        enc.sds.push(sd);
    }
    let d = columns.len();
    if d < 2 {
        return Err(EvalError::Pca(format!("{d} usable features, need at least 2")));
    }
    if n_components > d {
        return Err(EvalError::Pca(format!("{n_components} components requested from {d} features")));
    }

    let n = rows.len();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let s: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            s / (n as f64 - 1.0)
        })
        .collect();
    let mut corr = DMatrix::<f64>::zeros(d, d);
    for (&(i, j), &x) in pairs.iter().zip(&entries) {
        corr[(i, j)] = x;
        corr[(j, i)] = x;
    }

    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let variance_shares = eigenvalues.iter().map(|l| l / total).collect();

    let loadings: Vec<Vec<f64>> = order[..n_components]
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let big = v
                .iter()
                .copied()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
                .map(|(_, x)| x)
                .unwrap_or(0.0);
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    let scores: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            loadings
                .iter()
                .map(|w| w.iter().zip(&columns).map(|(a, col)| a * col[r]).sum())
                .collect()
        })
        .collect();

    Ok(PcaResult {
        encoding: enc,
        eigenvalues,
        variance_shares,
        n_components,
        loadings,
        scores,
        rows,
        warnings,
    })
}

/// Fits each table's PCA independently and lines up the top shares.
pub fn compare_pca(original: &Table, synthetic: &Table, n_components: usize) -> Result<PcaComparison> {
    let (a, b) = rayon::join(
        || pairwise_pca(original, n_components),
        || pairwise_pca(synthetic, n_components),
    );
    let (a, b) = (a?, b?);
    let share_differences = a
        .top_shares()
        .iter()
        .zip(b.top_shares())
        .map(|(x, y)| y - x)
        .collect();
    Ok(PcaComparison {
        original: a,
        synthetic: b,
        share_differences,
    })
}
