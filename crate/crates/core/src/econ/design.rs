use serde::{Deserialize, Serialize};

use super::spec::{LevelSpec, ModelKind, ModelSpec, Term};
use super::{EconError, Result};
use crate::table::{apply_recode, filter_rows, format_number, parse_decimal, ColumnData, FilterPredicate, RecodeSpec, Table};

pub const INTERCEPT: &str = "intercept";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DummyNote {
    pub column: String,
    pub reference: String,
    pub parameters: Vec<String>,
}

/// Regression inputs after recoding, filtering and dummy expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub model: String,
    pub kind: ModelKind,
    pub response: String,
    /// Parameter names, intercept first when present.
    pub names: Vec<String>,
    /// Column-major values: `x[j][i]`.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Rows removed by the filters.
    pub n_filtered_out: usize,
    /// Rows removed because a used value was missing or invalid (e.g. log of zero).
    pub n_dropped_invalid: usize,
    pub dummy_notes: Vec<DummyNote>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }
}

/// Numeric view of a column: numeric columns as is, categorical columns via
/// their labels, which must all parse as numbers.
fn numeric_values(t: &Table, name: &str) -> Result<Vec<f64>> {
    let c = t.require_index(name)?;
    match t.column(c) {
        ColumnData::Numeric(v) => Ok(v.clone()),
        ColumnData::Categorical(v) => {
            let cats = &t.column_schema(c).categories;
            let vals: Vec<Option<f64>> = cats.iter().map(|l| parse_decimal(l)).collect();
            v.iter()
                .map(|&k| {
                    vals[k as usize].ok_or_else(|| EconError::NonNumeric {
                        column: name.to_string(),
                        value: cats[k as usize].clone(),
                    })
                })
                .collect()
        }
    }
}

/// Per-row label and the ordered level list of a column used for dummies.
fn level_labels(t: &Table, name: &str) -> Result<(Vec<String>, Vec<usize>)> {
    let c = t.require_index(name)?;
    match t.column(c) {
        ColumnData::Categorical(v) => Ok((
            t.column_schema(c).categories.clone(),
            v.iter().map(|&k| k as usize).collect(),
        )),
        ColumnData::Numeric(v) => {
            let mut distinct: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let labels = distinct.iter().map(|&x| format_number(x)).collect();
            let codes = v
                .iter()
                .map(|x| {
                    distinct
                        .binary_search_by(|d| d.total_cmp(x))
                        .unwrap_or(usize::MAX)
                })
                .collect();
            Ok((labels, codes))
        }
    }
}

/// Applies recodes and filters, expands the model's terms and drops rows
/// with missing values in any used column.
pub fn build_design(
    t: &Table,
    recodes: &RecodeSpec,
    filter: &FilterPredicate,
    model: &ModelSpec,
) -> Result<DesignMatrix> {
    let recoded = apply_recode(t, recodes)?;
    let mut atoms = filter.atoms.clone();
    atoms.extend(model.filter.atoms.iter().cloned());
    let filtered = filter_rows(&recoded, &FilterPredicate { atoms })?;
    let n_filtered_out = t.n_rows() - filtered.n_rows();

    let y = numeric_values(&filtered, &model.response)?;
    let mut names = Vec::new();
    let mut x: Vec<Vec<f64>> = Vec::new();
    let mut dummy_notes = Vec::new();
    let n = filtered.n_rows();
    if model.intercept {
        names.push(INTERCEPT.to_string());
        x.push(vec![1.0; n]);
    }
    for term in &model.terms {
        match term {
            Term::Column(c) => {
                names.push(c.clone());
                x.push(numeric_values(&filtered, c)?);
            }
            Term::Interaction { interaction, name } => {
                if interaction.len() < 2 {
                    return Err(EconError::Spec(format!(
                        "model {}: an interaction needs at least two columns",
                        model.name
                    )));
                }
                let mut prod = vec![1.0; n];
                for c in interaction {
                    for (p, v) in prod.iter_mut().zip(numeric_values(&filtered, c)?) {
                        *p *= v;
                    }
                }
                names.push(name.clone().unwrap_or_else(|| interaction.join("_x_")));
                x.push(prod);
            }
            Term::Dummies {
                dummies,
                reference,
                levels,
                prefix,
            } => {
                let (labels, codes) = level_labels(&filtered, dummies)?;
                let present: Vec<bool> = {
                    let mut p = vec![false; labels.len()];
                    for &c in &codes {
                        if c < p.len() {
                            p[c] = true;
                        }
                    }
                    p
                };
                let chosen: Vec<(String, String)> = match levels {
                    Some(ls) => {
                        for (i, l) in labels.iter().enumerate() {
                            if present[i] && l != reference && !ls.iter().any(|s| s.level() == l) {
                                return Err(EconError::Spec(format!(
                                    "model {}: level {l:?} of {dummies} is neither the reference nor listed",
                                    model.name
                                )));
                            }
                        }
                        ls.iter()
                            .map(|s| match s {
                                LevelSpec::Label(l) => (l.clone(), format!("{prefix}{l}")),
                                LevelSpec::Named { level, name } => (level.clone(), name.clone()),
                            })
                            .collect()
                    }
                    None => labels
                        .iter()
                        .zip(&present)
                        .filter(|(l, &p)| p && *l != reference)
                        .map(|(l, _)| (l.clone(), format!("{prefix}{l}")))
                        .collect(),
                };
                if !labels.iter().zip(&present).any(|(l, &p)| p && l == reference) {
                    return Err(EconError::Spec(format!(
                        "model {}: reference level {reference:?} of {dummies} does not occur",
                        model.name
                    )));
                }
                let mut note = DummyNote {
                    column: dummies.clone(),
                    reference: reference.clone(),
                    parameters: Vec::new(),
                };
                for (level, pname) in chosen {
                    let code = labels.iter().position(|l| *l == level);
                    x.push(
                        codes
                            .iter()
                            .map(|&c| match c {
                                usize::MAX => f64::NAN,
                                c if Some(c) == code => 1.0,
                                _ => 0.0,
                            })
                            .collect(),
                    );
                    note.parameters.push(pname.clone());
                    names.push(pname);
                }
                dummy_notes.push(note);
            }
        }
    }

    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(EconError::Spec(format!("model {}: parameter {} appears twice", model.name, dup.1)));
    }

    let keep: Vec<usize> = (0..n)
        .filter(|&i| y[i].is_finite() && x.iter().all(|col| col[i].is_finite()))
        .collect();
    let n_dropped_invalid = n - keep.len();
    let y: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    let x: Vec<Vec<f64>> = x
        .into_iter()
        .map(|col| keep.iter().map(|&i| col[i]).collect())
        .collect();

    let p = names.len();
    if y.len() <= p {
        return Err(EconError::TooFewRows { n: y.len(), p });
    }
    for (name, col) in names.iter().zip(&x) {
        if name == INTERCEPT && model.intercept {
            continue;
        }
        if col.iter().all(|&v| v == col[0]) {
            return Err(EconError::ConstantPredictor(name.clone()));
        }
    }
    if model.kind == ModelKind::Logit {
        if let Some(bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(EconError::NotBinary {
                column: model.response.clone(),
                value: *bad,
            });
        }
    }

    Ok(DesignMatrix {
        model: model.name.clone(),
        kind: model.kind,
        response: model.response.clone(),
        names,
        x,
        y,
        n_filtered_out,
        n_dropped_invalid,
        dummy_notes,
    })
}
