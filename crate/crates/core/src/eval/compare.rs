use serde::{Deserialize, Serialize};

use super::binning::{numeric_bin, numeric_labels, quantile_edges};
use super::{EvalError, Result};
use crate::table::{format_number, ColumnData, ColumnKind, FilterPredicate, Table};

/// Default number of quantile bins for numeric targets.
pub const DEFAULT_BINS: usize = 20;

/// A subgroup's share in the synthetic table divided by its share in the
/// original below this value is flagged as undersampled (above its inverse,
/// oversampled).
pub const SHARE_RATIO_WARNING: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateComparison {
    pub feature: String,
    pub kind: ColumnKind,
    pub labels: Vec<String>,
    pub original_freq: Vec<f64>,
    pub synthetic_freq: Vec<f64>,
    /// Σ |original − synthetic| over bars.
    pub l1: f64,
}

/// Per-value frequency of one column in two tables, labelled and aligned.
struct Frequencies {
    labels: Vec<String>,
    counts: [Vec<u64>; 2],
}

fn frequencies(
    original: &Table,
    synthetic: &Table,
    feature: &str,
    n_bins: usize,
    rows: [Option<&[usize]>; 2],
) -> Result<(ColumnKind, Frequencies)> {
    let oi = original
        .index_of(feature)
        .ok_or_else(|| EvalError::UnknownFeature(feature.to_string()))?;
    let si = synthetic
        .index_of(feature)
        .ok_or_else(|| EvalError::UnknownFeature(feature.to_string()))?;
    let kind = original.column_schema(oi).kind;
    if synthetic.column_schema(si).kind != kind {
        return Err(EvalError::SchemaMismatch(format!("{feature} has different kinds")));
    }
    let tables = [(original, oi), (synthetic, si)];
    match kind {
        ColumnKind::Categorical => {
            let mut labels: Vec<String> = original.column_schema(oi).categories.clone();
            let mut maps: Vec<Vec<usize>> = Vec::with_capacity(2);
            for (t, c) in tables {
                maps.push(
                    t.column_schema(c)
                        .categories
                        .iter()
                        .map(|l| match labels.iter().position(|x| x == l) {
                            Some(i) => i,
                            None => {
                                labels.push(l.clone());
                                labels.len() - 1
                            }
                        })
                        .collect(),
                );
            }
            let mut counts = [vec![0u64; labels.len()], vec![0u64; labels.len()]];
            for (k, (t, c)) in tables.into_iter().enumerate() {
                let ColumnData::Categorical(v) = t.column(c) else { unreachable!() };
                let mut bump = |r: usize| counts[k][maps[k][v[r] as usize]] += 1;
                match rows[k] {
                    Some(rs) => rs.iter().for_each(|&r| bump(r)),
                    None => (0..v.len()).for_each(&mut bump),
                }
            }
            Ok((kind, Frequencies { labels, counts }))
        }
        ColumnKind::Numeric => {
            let ColumnData::Numeric(ov) = original.column(oi) else { unreachable!() };
            let values = |k: usize| -> Vec<f64> {
                let (t, c) = tables[k];
                let ColumnData::Numeric(v) = t.column(c) else { unreachable!() };
                match rows[k] {
                    Some(rs) => rs.iter().map(|&r| v[r]).collect(),
                    None => v.clone(),
                }
            };
            let (labels, bin): (Vec<String>, Box<dyn Fn(f64) -> usize>) = match discrete_levels(ov, n_bins) {
                // Few distinct values: one bar per value, then "other", then NaN.
                Some(levels) => {
                    let mut labels: Vec<String> = levels.iter().map(|&x| format_number(x)).collect();
                    labels.push("other".into());
                    labels.push("NaN".into());
                    let m = levels.len();
                    (
                        labels,
                        Box::new(move |x: f64| {
                            if x.is_nan() {
                                m + 1
                            } else {
                                levels.binary_search_by(|l| l.total_cmp(&x)).unwrap_or(m)
                            }
                        }),
                    )
                }
                None => {
                    let edges = quantile_edges(ov, n_bins);
                    (numeric_labels(&edges), Box::new(move |x: f64| numeric_bin(&edges, x) as usize))
                }
            };
            let mut counts = [vec![0u64; labels.len()], vec![0u64; labels.len()]];
            for (k, c) in counts.iter_mut().enumerate() {
                for x in values(k) {
                    c[bin(x)] += 1;
                }
            }
            // Drop trailing catch-all bars that neither side uses.
            let mut labels = labels;
            let is_catch_all = |l: &str| l == "NaN" || l == "other";
            while labels.last().is_some_and(|l| is_catch_all(l))
                && counts[0].last() == Some(&0)
                && counts[1].last() == Some(&0)
            {
                labels.pop();
                counts[0].pop();
                counts[1].pop();
            }
            Ok((kind, Frequencies { labels, counts }))
        }
    }
}

/// Sorted distinct finite values when there are at most `max` of them.
fn discrete_levels(values: &[f64], max: usize) -> Option<Vec<f64>> {
    let mut seen: Vec<f64> = Vec::new();
    for &x in values.iter().filter(|x| x.is_finite()) {
        if let Err(i) = seen.binary_search_by(|l| l.total_cmp(&x)) {
            if seen.len() == max {
                return None;
            }
            seen.insert(i, x);
        }
    }
    Some(seen)
}

fn normalise(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
        .collect()
}

/// Paired bar/histogram data for one feature. Numeric bins use the original's
/// quantiles, or one bar per value when it has at most `n_bins` distinct values.
pub fn univariate_compare(
    original: &Table,
    synthetic: &Table,
    feature: &str,
    n_bins: usize,
) -> Result<UnivariateComparison> {
    if n_bins < 2 {
        return Err(EvalError::Config("n_bins must be at least 2".into()));
    }
    let (kind, f) = frequencies(original, synthetic, feature, n_bins, [None, None])?;
    let o = normalise(&f.counts[0]);
    let s = normalise(&f.counts[1]);
    let l1 = o.iter().zip(&s).map(|(a, b)| (a - b).abs()).sum();
    Ok(UnivariateComparison {
        feature: feature.to_string(),
        kind,
        labels: f.labels,
        original_freq: o,
        synthetic_freq: s,
        l1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub n_matching: usize,
    pub n_total: usize,
    /// `n_matching / n_total`.
    pub share: f64,
    /// Relative frequency of each response within the subgroup; `None` when
    /// the subgroup is empty.
    pub frequencies: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubgroupWarning {
    EmptySubgroup { dataset: String },
    Undersampled { share_ratio: f64 },
    Oversampled { share_ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalComparison {
    pub filter: FilterPredicate,
    pub target: String,
    pub labels: Vec<String>,
    pub original: Subgroup,
    pub synthetic: Subgroup,
    /// Synthetic subgroup share over original subgroup share.
    pub share_ratio: Option<f64>,
    pub warnings: Vec<SubgroupWarning>,
}

/// Distribution of `target` within the rows matching `filter`, computed
/// separately in each table. Empty subgroups are reported, not errors.
pub fn conditional_compare(
    original: &Table,
    synthetic: &Table,
    filter: &FilterPredicate,
    target: &str,
) -> Result<ConditionalComparison> {
    let o_rows = filter.compile(original.schema())?.matching_rows(original);
    let s_rows = filter.compile(synthetic.schema())?.matching_rows(synthetic);
    let (_, f) = frequencies(original, synthetic, target, DEFAULT_BINS, [Some(&o_rows), Some(&s_rows)])?;
    let group = |rows: &[usize], t: &Table, counts: &[u64]| Subgroup {
        n_matching: rows.len(),
        n_total: t.n_rows(),
        share: if t.n_rows() == 0 { 0.0 } else { rows.len() as f64 / t.n_rows() as f64 },
        frequencies: (!rows.is_empty()).then(|| normalise(counts)),
    };
    let o = group(&o_rows, original, &f.counts[0]);
    let s = group(&s_rows, synthetic, &f.counts[1]);

    let mut warnings = Vec::new();
    for (name, g) in [("original", &o), ("synthetic", &s)] {
        if g.n_matching == 0 {
            warnings.push(SubgroupWarning::EmptySubgroup {
                dataset: name.to_string(),
            });
        }
    }
    let share_ratio = (o.share > 0.0).then(|| s.share / o.share);
    if let Some(r) = share_ratio {
        if r < SHARE_RATIO_WARNING {
            warnings.push(SubgroupWarning::Undersampled { share_ratio: r });
        } else if r > 1.0 / SHARE_RATIO_WARNING {
            warnings.push(SubgroupWarning::Oversampled { share_ratio: r });
        }
    }
    Ok(ConditionalComparison {
        filter: filter.clone(),
        target: target.to_string(),
        labels: f.labels,
        original: o,
        synthetic: s,
        share_ratio,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{read_csv, Atom, ColumnSchema};

    fn binary(codes: Vec<u32>) -> Table {
        Table::new(
            vec![ColumnSchema::categorical("b", ["0", "1"])],
            vec![ColumnData::Categorical(codes)],
        )
        .unwrap()
    }

    #[test]
    fn identical_has_zero_l1() {
        let t = binary(vec![0, 1, 1]);
        assert_eq!(univariate_compare(&t, &t, "b", 20).unwrap().l1, 0.0);
    }

    #[test]
    fn half_vs_three_quarters() {
        let c = univariate_compare(&binary(vec![0, 0, 1, 1]), &binary(vec![0, 0, 0, 1]), "b", 20).unwrap();
        assert!((c.l1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn absent_category_is_zero_bar() {
        let o = read_csv("c\na\nb\nc\n".as_bytes(), None).unwrap();
        let s = read_csv("c\na\na\nb\n".as_bytes(), None).unwrap();
        let cmp = univariate_compare(&o, &s, "c", 20).unwrap();
        assert_eq!(cmp.labels, vec!["a", "b", "c"]);
        assert_eq!(cmp.synthetic_freq[2], 0.0);
        assert!((cmp.synthetic_freq.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(univariate_compare(&o, &s, "zz", 20), Err(EvalError::UnknownFeature(_))));
    }

    #[test]
    fn numeric_histogram() {
        let o = read_csv("x\n1\n2\n3\n4\n".as_bytes(), None).unwrap();
        let cmp = univariate_compare(&o, &o, "x", 2).unwrap();
        assert_eq!(cmp.labels, vec!["(-inf, 3)", "[3, inf)"]);
        assert_eq!(cmp.original_freq, vec![0.5, 0.5]);
    }

    #[test]
    fn discrete_numeric_bars() {
        let o = read_csv("x\n1\n2\n2\n3\n".as_bytes(), None).unwrap();
        let s = read_csv("x\n1\n5\n".as_bytes(), None).unwrap();
        let cmp = univariate_compare(&o, &s, "x", 20).unwrap();
        assert_eq!(cmp.labels, vec!["1", "2", "3", "other"]);
        assert_eq!(cmp.original_freq, vec![0.25, 0.5, 0.25, 0.0]);
        assert_eq!(cmp.synthetic_freq, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn conditional_hand_count() {
        let o = read_csv(
            "g,t\n1,X\n1,X\n1,X\n1,Y\n0,X\n0,Y\n0,Y\n0,Y\n0,Y\n0,X\n".as_bytes(),
            None,
        )
        .unwrap();
        let p = FilterPredicate::all([Atom::eq("g", 1.0)]);
        let c = conditional_compare(&o, &o, &p, "t").unwrap();
        assert_eq!(c.original.n_matching, 4);
        assert_eq!(c.labels, vec!["X", "Y"]);
        assert_eq!(c.original.frequencies, Some(vec![0.75, 0.25]));
        assert_eq!(c.share_ratio, Some(1.0));
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn conditional_empty_subgroup() {
        let o = read_csv("g,t\n1,X\n0,Y\n".as_bytes(), None).unwrap();
        let p = FilterPredicate::all([Atom::eq("g", 5.0)]);
        let c = conditional_compare(&o, &o, &p, "t").unwrap();
        assert_eq!(c.original.frequencies, None);
        assert_eq!(c.share_ratio, None);
        assert_eq!(c.warnings.len(), 2);
    }
}
