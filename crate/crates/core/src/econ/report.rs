use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interval::{ci_overlap_classify, Direction, IntervalComparison, Overlap};
use super::spec::{ModelKind, ReplicationSpec};
use super::{fit_model, EconError, RegressionResult, Result};
use crate::table::Table;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFit {
    pub dataset: String,
    pub result: Option<RegressionResult>,
    /// Odds-ratio intervals per parameter (logit only).
    pub odds_ratio_ci: Option<Vec<(f64, f64)>>,
    pub error: Option<String>,
    pub n_filtered_out: Option<usize>,
    pub n_dropped_invalid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterComparison {
    pub parameter: String,
    /// Dataset compared against the reference.
    pub dataset: String,
    pub comparison: IntervalComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub kind: ModelKind,
    pub fits: Vec<DatasetFit>,
    pub comparisons: Vec<ParameterComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointEntry {
    pub model: String,
    pub parameter: String,
    pub dataset: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub n_compared: usize,
    pub n_agree: usize,
    /// Share of comparisons agreeing in sign and significance.
    pub qualitative_agreement_rate: Option<f64>,
    pub disjoint: Vec<DisjointEntry>,
    pub n_fits: usize,
    pub n_failed_fits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub schema_version: u32,
    pub datasets: Vec<String>,
    /// Every other dataset is compared against this one.
    pub reference: String,
    pub models: Vec<ModelReport>,
    pub agreement: AgreementSummary,
}

/// One line of the flat CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub dataset: String,
    pub parameter: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p: f64,
    pub classification: String,
}

impl ReplicationReport {
    /// One row per model, dataset and parameter of every successful fit.
    /// The reference dataset is labelled `reference`.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out = Vec::new();
        for m in &self.models {
            for f in &m.fits {
                let Some(r) = &f.result else { continue };
                for (i, p) in r.parameters.iter().enumerate() {
                    let classification = if f.dataset == self.reference {
                        "reference".to_string()
                    } else {
                        m.comparisons
                            .iter()
                            .find(|c| c.dataset == f.dataset && c.parameter == *p)
                            .map_or_else(String::new, |c| c.comparison.label())
                    };
                    out.push(ReportRow {
                        model: m.model.clone(),
                        dataset: f.dataset.clone(),
                        parameter: p.clone(),
                        estimate: r.coefficients[i],
                        se: r.std_errors[i],
                        ci_lo: r.ci_lower[i],
                        ci_hi: r.ci_upper[i],
                        p: r.p_values[i],
                        classification,
                    });
                }
            }
        }
        out
    }
}

/// Fits every model on every dataset and compares each parameter's interval
/// with the first dataset's. Logit parameters are compared as odds ratios
/// against 1, OLS coefficients against 0. A failed fit is recorded, not fatal.
pub fn replication_report(datasets: &[(&str, &Table)], spec: &ReplicationSpec) -> Result<ReplicationReport> {
    if datasets.len() < 2 {
        return Err(EconError::Spec("a replication needs at least two datasets".into()));
    }
    for (i, (name, _)) in datasets.iter().enumerate() {
        if datasets[..i].iter().any(|(n, _)| n == name) {
            return Err(EconError::Spec(format!("dataset name {name:?} is used twice")));
        }
    }
    if spec.models.is_empty() {
        return Err(EconError::Spec("no models".into()));
    }
    let mut names: Vec<&str> = spec.models.iter().map(|m| m.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(EconError::Spec(format!("model name {:?} is used twice", w[0])));
    }

    let jobs: Vec<(usize, usize)> = (0..spec.models.len())
        .flat_map(|m| (0..datasets.len()).map(move |d| (m, d)))
        .collect();
    let fits: Vec<DatasetFit> = jobs
        .par_iter()
        .map(|&(m, d)| {
            let (name, table) = datasets[d];
            match fit_model(table, spec, &spec.models[m]) {
                Ok((design, r)) => DatasetFit {
                    dataset: name.to_string(),
                    odds_ratio_ci: (r.kind == ModelKind::Logit).then(|| {
                        (0..r.parameters.len())
                            .map(|i| (r.ci_lower[i].exp(), r.ci_upper[i].exp()))
                            .collect()
                    }),
                    result: Some(r),
                    error: None,
                    n_filtered_out: Some(design.n_filtered_out),
                    n_dropped_invalid: Some(design.n_dropped_invalid),
                },
                Err(e) => DatasetFit {
                    dataset: name.to_string(),
                    result: None,
                    odds_ratio_ci: None,
                    error: Some(e.to_string()),
                    n_filtered_out: None,
                    n_dropped_invalid: None,
                },
            }
        })
        .collect();

    let mut models = Vec::with_capacity(spec.models.len());
    let mut fits = fits.into_iter();
    for model in &spec.models {
        let fits: Vec<DatasetFit> = fits.by_ref().take(datasets.len()).collect();
        let mut comparisons = Vec::new();
        if let Some(reference) = &fits[0].result {
            for other in &fits[1..] {
                let Some(r) = &other.result else { continue };
                for (i, p) in reference.parameters.iter().enumerate() {
                    let Ok(j) = r.index_of(p) else { continue };
                    let (a, b, threshold) = match model.kind {
                        ModelKind::Logit => (
                            fits[0].odds_ratio_ci.as_ref().expect("logit fit")[i],
                            other.odds_ratio_ci.as_ref().expect("logit fit")[j],
                            1.0,
                        ),
                        ModelKind::Ols => (reference.interval(i), r.interval(j), 0.0),
                    };
                    comparisons.push(ParameterComparison {
                        parameter: p.clone(),
                        dataset: other.dataset.clone(),
                        comparison: ci_overlap_classify(a, b, threshold),
                    });
                }
            }
        }
        models.push(ModelReport {
            model: model.name.clone(),
            kind: model.kind,
            fits,
            comparisons,
        });
    }

    let all: Vec<(&ModelReport, &ParameterComparison)> =
        models.iter().flat_map(|m| m.comparisons.iter().map(move |c| (m, c))).collect();
    let n_agree = all.iter().filter(|(_, c)| c.comparison.qualitative.agrees()).count();
    let disjoint = all
        .iter()
        .filter_map(|(m, c)| match c.comparison.overlap {
            Overlap::Disjoint(direction) => Some(DisjointEntry {
                model: m.model.clone(),
                parameter: c.parameter.clone(),
                dataset: c.dataset.clone(),
                direction,
            }),
            Overlap::Overlap => None,
        })
        .collect();
    let n_fits = models.iter().map(|m| m.fits.len()).sum();
    let n_failed_fits = models
        .iter()
        .flat_map(|m| &m.fits)
        .filter(|f| f.result.is_none())
        .count();

    Ok(ReplicationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        datasets: datasets.iter().map(|(n, _)| n.to_string()).collect(),
        reference: datasets[0].0.to_string(),
        agreement: AgreementSummary {
            n_compared: all.len(),
            n_agree,
            qualitative_agreement_rate: (!all.is_empty()).then(|| n_agree as f64 / all.len() as f64),
            disjoint,
            n_fits,
            n_failed_fits,
        },
        models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econ::{ModelSpec, Term};
    use crate::table::{ColumnData, ColumnSchema, FilterPredicate};

    fn table(shift: f64) -> Table {
        let n = 200;
        let x: Vec<f64> = (0..n).map(|i| f64::from(i % 17) / 4.0).collect();
        let z: Vec<f64> = (0..n).map(|i| f64::from((i * 7) % 11) / 3.0).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * x[i as usize] - 0.25 * z[i as usize] + f64::from((i * 13) % 5) - 2.0 + shift)
            .collect();
        let b: Vec<f64> = (0..n).map(|i| if (i * 31) % 7 < 3 { 1.0 } else { 0.0 }).collect();
        Table::new(
            vec![
                ColumnSchema::numeric("y"),
                ColumnSchema::numeric("x"),
                ColumnSchema::numeric("z"),
                ColumnSchema::numeric("b"),
            ],
            vec![
                ColumnData::Numeric(y),
                ColumnData::Numeric(x),
                ColumnData::Numeric(z),
                ColumnData::Numeric(b),
            ],
        )
        .unwrap()
    }

    fn spec() -> ReplicationSpec {
        let m = |name: &str, response: &str, kind| ModelSpec {
            name: name.into(),
            response: response.into(),
            kind,
            terms: vec![Term::Column("x".into()), Term::Column("z".into())],
            intercept: true,
            filter: FilterPredicate::default(),
        };
        ReplicationSpec {
            description: None,
            recodes: Default::default(),
            filter: Default::default(),
            models: vec![m("ols", "y", ModelKind::Ols), m("logit", "b", ModelKind::Logit)],
            robust_ols: false,
        }
    }

    #[test]
    fn identical_datasets_agree() {
        let t = table(0.0);
        let r = replication_report(&[("original", &t), ("copy", &t)], &spec()).unwrap();
        assert_eq!(r.agreement.n_compared, 6);
        assert_eq!(r.agreement.qualitative_agreement_rate, Some(1.0));
        assert!(r.agreement.disjoint.is_empty());
        assert_eq!(r.rows().len(), 12);
    }

    #[test]
    fn shifted_intercept_is_flagged() {
        let (a, b) = (table(0.0), table(10.0));
        let r = replication_report(&[("a", &a), ("b", &b)], &spec()).unwrap();
        assert_eq!(r.agreement.disjoint.len(), 1);
        assert_eq!(r.agreement.disjoint[0].parameter, "intercept");
        assert_eq!(r.agreement.disjoint[0].direction, Direction::Higher);
    }

    #[test]
    fn failures_are_per_dataset() {
        let a = table(0.0);
        let mut bad = spec();
        bad.models[0].terms.push(Term::Column("missing".into()));
        let r = replication_report(&[("a", &a), ("b", &a)], &bad).unwrap();
        assert_eq!(r.agreement.n_failed_fits, 2);
        assert!(r.models[0].fits[0].error.is_some());
        assert!(r.models[1].fits[0].result.is_some());
    }

    #[test]
    fn duplicate_names_rejected() {
        let a = table(0.0);
        assert!(replication_report(&[("a", &a), ("a", &a)], &spec()).is_err());
        assert!(replication_report(&[("a", &a)], &spec()).is_err());
    }
}
