use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{Binning, Encoded};
use super::{EvalError, Result};
use crate::rng::StreamRng;
use crate::table::Table;

const STAGE_SUBSETS: u64 = 11;
const STAGE_HOLDOUT: u64 = 12;
const DENSE_CELLS: u64 = 1 << 18;

pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMarginalConfig {
    /// Marginal width.
    pub k: usize,
    /// Subsets to sample; every subset is used when there are fewer.
    pub n_marginals: usize,
    /// Quantile bins for numeric features.
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for KMarginalConfig {
    fn default() -> Self {
        KMarginalConfig {
            k: 2,
            n_marginals: 1000,
            n_bins: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalScore {
    pub features: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    /// Mean score of the marginals containing this feature.
    pub mean_score: Option<f64>,
    pub n_marginals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMarginalReport {
    /// Mean marginal score in `[0, 1000]`.
    pub score: f64,
    /// `score` rounded half-up.
    pub score_rounded: i64,
    pub config: KMarginalConfig,
    pub per_marginal: Vec<MarginalScore>,
    pub per_feature_mean: Vec<FeatureScore>,
    pub baseline_score: Option<f64>,
}

/// `n choose k`, saturating.
fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc == u128::MAX {
            return acc;
        }
    }
    acc
}

/// Every k-subset in lexicographic order if there are at most `n_marginals`,
/// otherwise `n_marginals` distinct subsets drawn without replacement.
pub fn choose_subsets(d: usize, k: usize, n_marginals: usize, seed: u64) -> Vec<Vec<usize>> {
    if binomial(d, k) <= n_marginals as u128 {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..k).collect();
        loop {
            out.push(cur.clone());
            let Some(i) = (0..k).rev().find(|&i| cur[i] < d - k + i) else {
                return out;
            };
            cur[i] += 1;
            for j in i + 1..k {
                cur[j] = cur[j - 1] + 1;
            }
        }
    }
    let mut rng = StreamRng::new(seed, &[STAGE_SUBSETS]);
    let mut seen = HashSet::with_capacity(n_marginals);
    let mut out = Vec::with_capacity(n_marginals);
    let mut pool: Vec<usize> = (0..d).collect();
    while out.len() < n_marginals {
        for i in 0..k {
            let j = i + rng.index(d - i);
            pool.swap(i, j);
        }
        let mut s = pool[..k].to_vec();
        s.sort_unstable();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

/// Total variation distance between the joint distributions of the given
/// code columns. Computed as an exact integer sum, so identical inputs give
/// exactly 0 and disjoint supports exactly 1.
pub(crate) fn joint_tvd(a: &[&[u32]], b: &[&[u32]], cardinality: &[u64]) -> f64 {
    let na = a.first().map_or(0, |c| c.len()) as u128;
    let nb = b.first().map_or(0, |c| c.len()) as u128;
    if na == 0 || nb == 0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    let product = cardinality.iter().try_fold(1u64, |acc, &c| acc.checked_mul(c));
    let key = |cols: &[&[u32]], r: usize| -> u64 {
        cols.iter()
            .zip(cardinality)
            .fold(0u64, |acc, (c, &card)| acc * card + c[r] as u64)
    };
    let sum: u128 = match product {
        Some(p) if p <= DENSE_CELLS => {
            let mut ca = vec![0u64; p as usize];
            let mut cb = vec![0u64; p as usize];
            for r in 0..na as usize {
                ca[key(a, r) as usize] += 1;
            }
            for r in 0..nb as usize {
                cb[key(b, r) as usize] += 1;
            }
            ca.iter()
                .zip(&cb)
                .map(|(&x, &y)| (x as u128 * nb).abs_diff(y as u128 * na))
                .sum()
        }
        Some(_) => {
            let mut counts: HashMap<u64, (u64, u64)> = HashMap::new();
            for r in 0..na as usize {
                counts.entry(key(a, r)).or_default().0 += 1;
            }
            for r in 0..nb as usize {
                counts.entry(key(b, r)).or_default().1 += 1;
            }
            counts
                .values()
                .map(|&(x, y)| (x as u128 * nb).abs_diff(y as u128 * na))
                .sum()
        }
        None => {
            let mut counts: HashMap<Vec<u32>, (u64, u64)> = HashMap::new();
            for r in 0..na as usize {
                counts.entry(a.iter().map(|c| c[r]).collect()).or_default().0 += 1;
            }
            for r in 0..nb as usize {
                counts.entry(b.iter().map(|c| c[r]).collect()).or_default().1 += 1;
            }
            counts
                .values()
                .map(|&(x, y)| (x as u128 * nb).abs_diff(y as u128 * na))
                .sum()
        }
    };
    sum as f64 / (2 * na * nb) as f64
}

fn validate(cfg: &KMarginalConfig, d: usize) -> Result<()> {
    if cfg.k < 1 || cfg.k > d {
        return Err(EvalError::Config(format!(
            "k = {} must be between 1 and the feature count {d}",
            cfg.k
        )));
    }
    if cfg.n_bins < 2 {
        return Err(EvalError::Config("n_bins must be at least 2".into()));
    }
    if cfg.n_marginals < 1 {
        return Err(EvalError::Config("n_marginals must be at least 1".into()));
    }
    Ok(())
}

/// k-marginal similarity, with numeric bin edges from `original`'s quantiles.
///
/// Each sampled k-subset of features scores `1000 * (1 - TVD)` between the
/// two binned joint distributions; the report score is their mean.
pub fn k_marginal_score(original: &Table, synthetic: &Table, cfg: &KMarginalConfig) -> Result<KMarginalReport> {
    let binning = Binning::from_table(original, cfg.n_bins)?;
    k_marginal_score_with(&binning, original, synthetic, cfg)
}

/// Same as [`k_marginal_score`] with externally fixed bins.
pub fn k_marginal_score_with(
    binning: &Binning,
    original: &Table,
    synthetic: &Table,
    cfg: &KMarginalConfig,
) -> Result<KMarginalReport> {
    let d = binning.features.len();
    validate(cfg, d)?;
    if original.n_rows() == 0 || synthetic.n_rows() == 0 {
        return Err(EvalError::Empty("k-marginal scoring needs two nonempty tables".into()));
    }
    let Encoded {
        codes, cardinality, ..
    } = binning.encode(&[original, synthetic])?;
    let subsets = choose_subsets(d, cfg.k, cfg.n_marginals, cfg.seed);
    let scores: Vec<f64> = subsets
        .par_iter()
        .map(|s| {
            let a: Vec<&[u32]> = s.iter().map(|&f| codes[0][f].as_slice()).collect();
            let b: Vec<&[u32]> = s.iter().map(|&f| codes[1][f].as_slice()).collect();
            let card: Vec<u64> = s.iter().map(|&f| cardinality[f]).collect();
            1000.0 * (1.0 - joint_tvd(&a, &b, &card))
        })
        .collect();

    let names = binning.feature_names();
    let score = scores.iter().sum::<f64>() / scores.len() as f64;
    let mut sums = vec![(0.0, 0usize); d];
    for (s, &v) in subsets.iter().zip(&scores) {
        for &f in s {
            sums[f].0 += v;
            sums[f].1 += 1;
        }
    }
    Ok(KMarginalReport {
        score,
        score_rounded: (score + 0.5).floor() as i64,
        config: cfg.clone(),
        per_marginal: subsets
            .iter()
            .zip(&scores)
            .map(|(s, &score)| MarginalScore {
                features: s.iter().map(|&f| names[f].clone()).collect(),
                score,
            })
            .collect(),
        per_feature_mean: names
            .iter()
            .zip(&sums)
            .map(|(n, &(sum, count))| FeatureScore {
                feature: n.clone(),
                mean_score: (count > 0).then(|| sum / count as f64),
                n_marginals: count,
            })
            .collect(),
        baseline_score: None,
    })
}

/// Score of a random `holdout_fraction` split of `original` against the
/// remainder, binned on the full original. The practical ceiling for a
/// synthetic table of similar size.
pub fn baseline_score(original: &Table, cfg: &KMarginalConfig, holdout_fraction: f64, seed: u64) -> Result<f64> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(EvalError::Config(format!(
            "holdout fraction {holdout_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n = original.n_rows();
    if n < 10 {
        return Err(EvalError::Empty(format!("baseline needs at least 10 rows, found {n}")));
    }
    let n_a = (holdout_fraction * n as f64).round() as usize;
    if n_a == 0 || n_a == n {
        return Err(EvalError::DegeneratePartition { n_rows: n, holdout: n_a });
    }
    let mut rng = StreamRng::new(seed, &[STAGE_HOLDOUT]);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n_a {
        let j = i + rng.index(n - i);
        idx.swap(i, j);
    }
    let mut a = idx[..n_a].to_vec();
    let mut b = idx[n_a..].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let binning = Binning::from_table(original, cfg.n_bins)?;
    let report = k_marginal_score_with(&binning, &original.take_rows(&a), &original.take_rows(&b), cfg)?;
    Ok(report.score)
}

/// Features sorted by ascending mean marginal score; ties keep column order.
pub fn worst_features(report: &KMarginalReport, top_n: usize) -> Vec<FeatureScore> {
    let mut scored: Vec<FeatureScore> = report
        .per_feature_mean
        .iter()
        .filter(|f| f.mean_score.is_some())
        .cloned()
        .collect();
    scored.sort_by(|a, b| a.mean_score.unwrap().total_cmp(&b.mean_score.unwrap()));
    scored.truncate(top_n);
    scored
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ColumnData, ColumnSchema};

    fn cat(codes: Vec<u32>, labels: &[&str]) -> Table {
        Table::new(
            vec![ColumnSchema::categorical("x", labels.iter().copied())],
            vec![ColumnData::Categorical(codes)],
        )
        .unwrap()
    }

    #[test]
    fn identical_is_1000() {
        let t = cat(vec![0, 1, 1, 0, 1], &["a", "b"]);
        let r = k_marginal_score(&t, &t, &KMarginalConfig { k: 1, ..Default::default() }).unwrap();
        assert_eq!(r.score, 1000.0);
        assert_eq!(r.score_rounded, 1000);
    }

    #[test]
    fn disjoint_is_zero() {
        let a = cat(vec![0, 0, 1], &["a", "b"]);
        let b = cat(vec![0, 1, 1, 1], &["c", "d"]);
        let r = k_marginal_score(&a, &b, &KMarginalConfig { k: 1, ..Default::default() }).unwrap();
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn half_half_vs_three_quarters() {
        let a = cat(vec![0, 0, 1, 1], &["A", "B"]);
        let b = cat(vec![0, 0, 0, 1], &["A", "B"]);
        let r = k_marginal_score(&a, &b, &KMarginalConfig { k: 1, ..Default::default() }).unwrap();
        assert_eq!(r.score, 750.0);
    }

    #[test]
    fn k_out_of_range() {
        let t = cat(vec![0], &["a"]);
        assert!(k_marginal_score(&t, &t, &KMarginalConfig { k: 2, ..Default::default() }).is_err());
        assert!(k_marginal_score(&t, &t, &KMarginalConfig { k: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn schema_mismatch() {
        let a = cat(vec![0], &["a"]);
        let b = Table::new(vec![ColumnSchema::numeric("x")], vec![ColumnData::Numeric(vec![1.0])]).unwrap();
        assert!(matches!(
            k_marginal_score(&a, &b, &KMarginalConfig { k: 1, ..Default::default() }),
            Err(EvalError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn subsets_enumerate_or_sample() {
        let all = choose_subsets(4, 2, 1000, 1);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        let some = choose_subsets(30, 3, 50, 7);
        assert_eq!(some.len(), 50);
        let unique: HashSet<_> = some.iter().collect();
        assert_eq!(unique.len(), 50);
        assert_eq!(some, choose_subsets(30, 3, 50, 7));
        assert_eq!(binomial(200, 2), 19_900);
    }

    #[test]
    fn baseline_of_constant_column() {
        let t = cat(vec![0; 50], &["a"]);
        let s = baseline_score(&t, &KMarginalConfig { k: 1, ..Default::default() }, 0.3, 4).unwrap();
        assert_eq!(s, 1000.0);
    }

    #[test]
    fn baseline_errors() {
        let t = cat(vec![0; 5], &["a"]);
        let cfg = KMarginalConfig { k: 1, ..Default::default() };
        assert!(baseline_score(&t, &cfg, 0.3, 1).is_err());
        let t = cat(vec![0; 20], &["a"]);
        assert!(baseline_score(&t, &cfg, 1.0, 1).is_err());
        assert!(matches!(
            baseline_score(&t, &cfg, 0.01, 1),
            Err(EvalError::DegeneratePartition { .. })
        ));
    }

    #[test]
    fn worst_features_clamps_and_orders() {
        let report = KMarginalReport {
            score: 0.0,
            score_rounded: 0,
            config: KMarginalConfig::default(),
            per_marginal: vec![],
            per_feature_mean: vec![
                FeatureScore { feature: "a".into(), mean_score: Some(900.0), n_marginals: 1 },
                FeatureScore { feature: "b".into(), mean_score: Some(500.0), n_marginals: 1 },
                FeatureScore { feature: "c".into(), mean_score: Some(900.0), n_marginals: 1 },
            ],
            baseline_score: None,
        };
        let w = worst_features(&report, 10);
        assert_eq!(
            w.iter().map(|f| f.feature.as_str()).collect::<Vec<_>>(),
            vec!["b", "a", "c"]
        );
        assert_eq!(worst_features(&report, 1).len(), 1);
    }
}
