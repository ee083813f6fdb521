use serde::{Deserialize, Serialize};

use super::{parse_decimal, ColumnData, Result, Table, TableError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub category: String,
    pub share: f64,
    pub non_response: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub column: String,
    /// Rows that contributed (non-NaN for numeric columns).
    pub n: usize,
    /// Mean of a numeric column, or of a categorical column whose codes are all numbers.
    pub mean: Option<f64>,
    /// Category shares, categorical columns only.
    pub shares: Option<Vec<CategoryShare>>,
}

/// Per-column means and category shares. With `weighted`, every statistic
/// uses the table's weight column: mean = Σwx / Σw.
pub fn summarize(t: &Table, columns: &[&str], weighted: bool) -> Result<Vec<ColumnSummary>> {
    let weights = if weighted {
        Some(t.weights().ok_or_else(|| {
            TableError::Schema("weighted summary requested but the table has no weight column".into())
        })?)
    } else {
        None
    };
    let w = |row: usize| weights.map_or(1.0, |w| w[row]);

    columns
        .iter()
        .map(|name| {
            let idx = t.require_index(name)?;
            let schema = t.column_schema(idx);
            match t.column(idx) {
                ColumnData::Numeric(v) => {
                    let (mut sw, mut swx, mut n) = (0.0, 0.0, 0usize);
                    for (row, &x) in v.iter().enumerate() {
                        if x.is_nan() {
                            continue;
                        }
                        sw += w(row);
                        swx += w(row) * x;
                        n += 1;
                    }
                    Ok(ColumnSummary {
                        column: name.to_string(),
                        n,
                        mean: (n > 0).then(|| swx / sw),
                        shares: None,
                    })
                }
                ColumnData::Categorical(codes) => {
                    let mut mass = vec![0.0; schema.categories.len()];
                    let mut total = 0.0;
                    for (row, &c) in codes.iter().enumerate() {
                        mass[c as usize] += w(row);
                        total += w(row);
                    }
                    let numeric_codes: Option<Vec<f64>> =
                        schema.categories.iter().map(|c| parse_decimal(c)).collect();
                    let mean = match (&numeric_codes, codes.is_empty()) {
                        (Some(vals), false) => {
                            Some(vals.iter().zip(&mass).map(|(x, m)| x * m).sum::<f64>() / total)
                        }
                        _ => None,
                    };
                    let shares = schema
                        .categories
                        .iter()
                        .zip(&mass)
                        .map(|(c, m)| CategoryShare {
                            category: c.clone(),
                            share: if total > 0.0 { m / total } else { 0.0 },
                            non_response: schema.nr_codes.contains(c),
                        })
                        .collect();
                    Ok(ColumnSummary {
                        column: name.to_string(),
                        n: codes.len(),
                        mean,
                        shares: Some(shares),
                    })
                }
            }
        })
        .collect()
}
