use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Result, SynthError};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchAudit {
    /// Share of synthetic rows whose quasi-identifier tuple occurs in the original.
    pub match_rate: f64,
    /// Share of synthetic rows whose tuple occurs exactly once in the original.
    pub unique_match_rate: f64,
    pub n_synthetic: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Text(String),
    Bits(u64),
}

fn tuple(t: &Table, cols: &[usize], row: usize) -> Vec<Key> {
    cols.iter()
        .map(|&c| match t.cell(row, c) {
            Cell::Cat(i) => Key::Text(t.column_schema(c).categories[i as usize].clone()),
            // +0.0 and -0.0 are the same value.
            Cell::Num(x) => Key::Bits(if x == 0.0 { 0 } else { x.to_bits() }),
        })
        .collect()
}

/// Exact-match disclosure audit over quasi-identifier columns. Tuples are
/// compared by category text and numeric value, so the two tables may order
/// their categories differently.
pub fn exact_match_audit(original: &Table, synthetic: &Table, quasi_identifiers: &[&str]) -> Result<MatchAudit> {
    if quasi_identifiers.is_empty() {
        return Err(SynthError::Config("exact-match audit needs at least one column".into()));
    }
    let oc = quasi_identifiers
        .iter()
        .map(|n| original.require_index(n))
        .collect::<Result<Vec<_>, _>>()?;
    let sc = quasi_identifiers
        .iter()
        .map(|n| synthetic.require_index(n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts: HashMap<Vec<Key>, usize> = HashMap::with_capacity(original.n_rows());
    for r in 0..original.n_rows() {
        *counts.entry(tuple(original, &oc, r)).or_default() += 1;
    }
    let (mut matched, mut unique) = (0usize, 0usize);
    for r in 0..synthetic.n_rows() {
        match counts.get(&tuple(synthetic, &sc, r)) {
            Some(1) => {
                matched += 1;
                unique += 1;
            }
            Some(_) => matched += 1,
            None => {}
        }
    }
    let n = synthetic.n_rows();
    let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(MatchAudit {
        match_rate: rate(matched),
        unique_match_rate: rate(unique),
        n_synthetic: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ColumnData, ColumnSchema};

    fn cat(values: &[&str], categories: &[&str]) -> Table {
        let codes = values
            .iter()
            .map(|v| categories.iter().position(|c| c == v).unwrap() as u32)
            .collect();
        Table::new(
            vec![ColumnSchema::categorical("q", categories.iter().copied())],
            vec![ColumnData::Categorical(codes)],
        )
        .unwrap()
    }

    #[test]
    fn copy_matches_everything() {
        let t = cat(&["a", "b", "b"], &["a", "b"]);
        let a = exact_match_audit(&t, &t, &["q"]).unwrap();
        assert_eq!(a.match_rate, 1.0);
        assert!((a.unique_match_rate - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_matches_nothing() {
        let o = cat(&["a", "b"], &["a", "b"]);
        let s = cat(&["c", "d"], &["c", "d"]);
        assert_eq!(exact_match_audit(&o, &s, &["q"]).unwrap().match_rate, 0.0);
    }

    #[test]
    fn compares_labels_not_codes() {
        let o = cat(&["a", "b"], &["a", "b"]);
        let s = cat(&["a"], &["z", "a"]);
        assert_eq!(exact_match_audit(&o, &s, &["q"]).unwrap().match_rate, 1.0);
    }

    #[test]
    fn empty_column_list_errors() {
        let t = cat(&["a"], &["a"]);
        assert!(exact_match_audit(&t, &t, &[]).is_err());
    }
}
