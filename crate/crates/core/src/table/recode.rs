use serde::{Deserialize, Serialize};

use super::{
    format_number, parse_decimal, Atom, Cell, ColumnData, ColumnSchema, FilterPredicate, Operand, Result, Table,
    TableError,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Any,
    All,
}

/// What a numeric rule does with a row where the transform is undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidPolicy {
    #[default]
    Error,
    /// Emit NaN; downstream model builders drop and count such rows.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGroup {
    pub label: String,
    pub codes: Vec<Operand>,
}

/// One derived column. Rules run in order and may use columns created by
/// earlier rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecodeRule {
    /// 1 when any (or all) atoms hold, else 0.
    Indicator {
        target: String,
        atoms: Vec<Atom>,
        #[serde(default)]
        mode: MatchMode,
    },
    /// Product of numeric (or numerically coded categorical) columns.
    Product { target: String, columns: Vec<String> },
    Ratio {
        target: String,
        numerator: String,
        denominator: String,
        #[serde(default)]
        on_invalid: InvalidPolicy,
    },
    /// Natural log.
    Log {
        target: String,
        source: String,
        #[serde(default)]
        on_invalid: InvalidPolicy,
    },
    /// Categorical bucket by ascending edges: label `i` covers `[edges[i-1], edges[i])`.
    Bucket {
        target: String,
        source: String,
        edges: Vec<f64>,
        labels: Vec<String>,
    },
    /// Regroups source codes into new categories.
    Map {
        target: String,
        source: String,
        groups: Vec<MapGroup>,
        #[serde(default)]
        default: Option<String>,
    },
}

impl RecodeRule {
    pub fn target(&self) -> &str {
        match self {
            RecodeRule::Indicator { target, .. }
            | RecodeRule::Product { target, .. }
            | RecodeRule::Ratio { target, .. }
            | RecodeRule::Log { target, .. }
            | RecodeRule::Bucket { target, .. }
            | RecodeRule::Map { target, .. } => target,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecodeSpec {
    pub rules: Vec<RecodeRule>,
}

/// Appends the derived columns. Existing columns are shared, never modified.
pub fn apply_recode(t: &Table, spec: &RecodeSpec) -> Result<Table> {
    let mut out = t.clone();
    for rule in &spec.rules {
        let (schema, data) = derive(&out, rule)?;
        out = out.with_column(schema, data)?;
    }
    Ok(out)
}

fn recode_err(target: &str, message: impl Into<String>) -> TableError {
    TableError::Recode {
        target: target.to_string(),
        message: message.into(),
    }
}

/// Numeric reading of a cell: the value itself, or the category text parsed as a number.
fn numeric_view(t: &Table, col: usize, target: &str) -> Result<Vec<f64>> {
    let schema = t.column_schema(col);
    match t.column(col) {
        ColumnData::Numeric(v) => Ok(v.clone()),
        ColumnData::Categorical(codes) => {
            let parsed: Vec<Option<f64>> = schema.categories.iter().map(|c| parse_decimal(c)).collect();
            codes
                .iter()
                .map(|&c| {
                    parsed[c as usize].ok_or_else(|| {
                        recode_err(
                            target,
                            format!(
                                "column {} category {:?} is not numeric",
                                schema.name, schema.categories[c as usize]
                            ),
                        )
                    })
                })
                .collect()
        }
    }
}

fn column_for(t: &Table, name: &str, target: &str) -> Result<usize> {
    t.index_of(name)
        .ok_or_else(|| recode_err(target, format!("missing column {name}")))
}

fn finish(target: &str, values: Vec<f64>, policy: InvalidPolicy, what: &str) -> Result<Vec<f64>> {
    if policy == InvalidPolicy::Error {
        if let Some(row) = values.iter().position(|x| !x.is_finite()) {
            return Err(recode_err(target, format!("row {row}: {what}")));
        }
    }
    Ok(values.into_iter().map(|x| if x.is_finite() { x } else { f64::NAN }).collect())
}

fn derive(t: &Table, rule: &RecodeRule) -> Result<(ColumnSchema, ColumnData)> {
    let target = rule.target();
    if t.index_of(target).is_some() {
        return Err(recode_err(target, "target column already exists"));
    }
    match rule {
        RecodeRule::Indicator { atoms, mode, .. } => {
            for a in atoms {
                column_for(t, &a.column, target)?;
            }
            let compiled: Vec<_> = atoms
                .iter()
                .map(|a| FilterPredicate::all([a.clone()]).compile(t.schema()))
                .collect::<Result<_>>()?;
            let values = (0..t.n_rows())
                .map(|row| {
                    let hit = match mode {
                        MatchMode::Any => compiled.iter().any(|p| p.matches_row(t, row)),
                        MatchMode::All => compiled.iter().all(|p| p.matches_row(t, row)),
                    };
                    if hit {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok((ColumnSchema::numeric(target), ColumnData::Numeric(values)))
        }
        RecodeRule::Product { columns, .. } => {
            if columns.is_empty() {
                return Err(recode_err(target, "product of no columns"));
            }
            let mut acc = vec![1.0; t.n_rows()];
            for c in columns {
                let v = numeric_view(t, column_for(t, c, target)?, target)?;
                for (a, x) in acc.iter_mut().zip(v) {
                    *a *= x;
                }
            }
            Ok((ColumnSchema::numeric(target), ColumnData::Numeric(acc)))
        }
        RecodeRule::Ratio {
            numerator,
            denominator,
            on_invalid,
            ..
        } => {
            let num = numeric_view(t, column_for(t, numerator, target)?, target)?;
            let den = numeric_view(t, column_for(t, denominator, target)?, target)?;
            let values = num
                .iter()
                .zip(&den)
                .map(|(n, d)| if *d == 0.0 { f64::NAN } else { n / d })
                .collect();
            let values = finish(target, values, *on_invalid, "division by zero")?;
            Ok((ColumnSchema::numeric(target), ColumnData::Numeric(values)))
        }
        RecodeRule::Log {
            source, on_invalid, ..
        } => {
            let v = numeric_view(t, column_for(t, source, target)?, target)?;
            let values = v
                .iter()
                .map(|&x| if x > 0.0 { x.ln() } else { f64::NAN })
                .collect();
            let values = finish(target, values, *on_invalid, "log of a non-positive value")?;
            Ok((ColumnSchema::numeric(target), ColumnData::Numeric(values)))
        }
        RecodeRule::Bucket {
            source,
            edges,
            labels,
            ..
        } => {
            if labels.len() != edges.len() + 1 {
                return Err(recode_err(target, "need exactly one more label than edges"));
            }
            if edges.windows(2).any(|w| w[0].is_nan() || w[1].is_nan() || w[0] >= w[1]) {
                return Err(recode_err(target, "edges must be strictly ascending"));
            }
            let schema = ColumnSchema::categorical(target, labels.iter().cloned());
            schema.validate()?;
            let v = numeric_view(t, column_for(t, source, target)?, target)?;
            if let Some(row) = v.iter().position(|x| x.is_nan()) {
                return Err(recode_err(target, format!("row {row}: missing value")));
            }
            let codes = v
                .iter()
                .map(|&x| edges.partition_point(|&e| e <= x) as u32)
                .collect();
            Ok((schema, ColumnData::Categorical(codes)))
        }
        RecodeRule::Map {
            source,
            groups,
            default,
            ..
        } => {
            let src = column_for(t, source, target)?;
            let mut categories: Vec<String> = groups.iter().map(|g| g.label.clone()).collect();
            if let Some(d) = default {
                if !categories.contains(d) {
                    categories.push(d.clone());
                }
            }
            let schema = ColumnSchema::categorical(target, categories);
            schema.validate()?;
            let lookup = |label: &str| -> Option<u32> {
                groups
                    .iter()
                    .position(|g| g.codes.iter().any(|c| operand_label(c) == label))
                    .map(|i| i as u32)
                    .or_else(|| default.as_ref().and_then(|d| schema.category_index(d)))
            };
            let src_schema = t.column_schema(src);
            let codes = (0..t.n_rows())
                .map(|row| {
                    let label = match t.cell(row, src) {
                        Cell::Cat(i) => src_schema.categories[i as usize].clone(),
                        Cell::Num(x) => format_number(x),
                    };
                    lookup(&label).ok_or_else(|| {
                        recode_err(target, format!("row {row}: no group for source value {label:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((schema, ColumnData::Categorical(codes)))
        }
    }
}

fn operand_label(op: &Operand) -> String {
    match op {
        Operand::Num(x) => format_number(*x),
        Operand::Text(s) => s.clone(),
    }
}
