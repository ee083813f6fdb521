use serde::{Deserialize, Serialize};

use super::{format_number, parse_decimal, Cell, ColumnData, ColumnSchema, Result, Table, TableError};

/// A literal in a predicate. Numbers and strings are both accepted; for
/// categorical columns a number is compared against the category text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operand {
    Num(f64),
    Text(String),
}

impl Operand {
    fn as_label(&self) -> String {
        match self {
            Operand::Num(x) => format_number(*x),
            Operand::Text(s) => s.clone(),
        }
    }

    fn as_number(&self) -> Option<f64> {
        match self {
            Operand::Num(x) => Some(*x),
            Operand::Text(s) => parse_decimal(s),
        }
    }
}

impl From<&str> for Operand {
    fn from(s: &str) -> Self {
        Operand::Text(s.to_string())
    }
}

impl From<f64> for Operand {
    fn from(x: f64) -> Self {
        Operand::Num(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Operator {
    Eq { value: Operand },
    Ne { value: Operand },
    In { values: Vec<Operand> },
    NotIn { values: Vec<Operand> },
    /// Closed numeric range `[min, max]`. On categorical columns it applies
    /// to categories whose text is a number.
    Range { min: f64, max: f64 },
    OutsideRange { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub column: String,
    #[serde(flatten)]
    pub op: Operator,
}

impl Atom {
    pub fn eq(column: &str, value: impl Into<Operand>) -> Atom {
        Atom {
            column: column.into(),
            op: Operator::Eq {
                value: value.into(),
            },
        }
    }

    pub fn ne(column: &str, value: impl Into<Operand>) -> Atom {
        Atom {
            column: column.into(),
            op: Operator::Ne {
                value: value.into(),
            },
        }
    }

    pub fn is_in<V: Into<Operand>>(column: &str, values: impl IntoIterator<Item = V>) -> Atom {
        Atom {
            column: column.into(),
            op: Operator::In {
                values: values.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn range(column: &str, min: f64, max: f64) -> Atom {
        Atom {
            column: column.into(),
            op: Operator::Range { min, max },
        }
    }

    /// The complementary atom: exactly the rows this atom rejects.
    pub fn negated(&self) -> Atom {
        let op = match &self.op {
            Operator::Eq { value } => Operator::Ne {
                value: value.clone(),
            },
            Operator::Ne { value } => Operator::Eq {
                value: value.clone(),
            },
            Operator::In { values } => Operator::NotIn {
                values: values.clone(),
            },
            Operator::NotIn { values } => Operator::In {
                values: values.clone(),
            },
            Operator::Range { min, max } => Operator::OutsideRange {
                min: *min,
                max: *max,
            },
            Operator::OutsideRange { min, max } => Operator::Range {
                min: *min,
                max: *max,
            },
        };
        Atom {
            column: self.column.clone(),
            op,
        }
    }
}

/// Conjunction of atoms. An empty predicate accepts every row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterPredicate {
    pub atoms: Vec<Atom>,
}

impl FilterPredicate {
    pub fn all(atoms: impl IntoIterator<Item = Atom>) -> Self {
        FilterPredicate {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn always() -> Self {
        FilterPredicate::default()
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.atoms.iter().map(|a| a.column.as_str())
    }

    /// Resolves column names and category labels against a schema.
    pub fn compile(&self, schema: &[ColumnSchema]) -> Result<CompiledPredicate> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| compile_atom(a, schema))
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledPredicate { atoms })
    }
}

#[derive(Debug, Clone)]
enum Test {
    /// Accepted category indices.
    Categories(Vec<bool>),
    NumIn(Vec<f64>),
    NumRange(f64, f64),
}

#[derive(Debug, Clone)]
struct CompiledAtom {
    column: usize,
    test: Test,
    negate: bool,
}

impl CompiledAtom {
    fn accepts(&self, cell: Cell) -> bool {
        let hit = match (&self.test, cell) {
            (Test::Categories(ok), Cell::Cat(i)) => ok.get(i as usize).copied().unwrap_or(false),
            (Test::NumIn(vals), Cell::Num(x)) => vals.contains(&x),
            (Test::NumRange(lo, hi), Cell::Num(x)) => *lo <= x && x <= *hi,
            _ => false,
        };
        hit != self.negate
    }
}

/// A predicate bound to a particular schema.
#[derive(Debug, Clone)]
pub struct CompiledPredicate {
    atoms: Vec<CompiledAtom>,
}

impl CompiledPredicate {
    /// Evaluates the predicate on a row given by a cell accessor over column indices.
    pub fn matches(&self, cell: impl Fn(usize) -> Cell) -> bool {
        self.atoms.iter().all(|a| a.accepts(cell(a.column)))
    }

    pub fn matches_row(&self, table: &Table, row: usize) -> bool {
        self.matches(|c| table.cell(row, c))
    }

    /// Column indices referenced by the predicate, in atom order.
    pub fn column_indices(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for a in &self.atoms {
            if !out.contains(&a.column) {
                out.push(a.column);
            }
        }
        out
    }

    /// Indices of matching rows, in order.
    pub fn matching_rows(&self, table: &Table) -> Vec<usize> {
        if self.atoms.is_empty() {
            return (0..table.n_rows()).collect();
        }
        let mut keep = vec![true; table.n_rows()];
        for atom in &self.atoms {
            match table.column(atom.column) {
                ColumnData::Categorical(v) => {
                    for (k, &c) in keep.iter_mut().zip(v) {
                        *k = *k && atom.accepts(Cell::Cat(c));
                    }
                }
                ColumnData::Numeric(v) => {
                    for (k, &x) in keep.iter_mut().zip(v) {
                        *k = *k && atom.accepts(Cell::Num(x));
                    }
                }
            }
        }
        keep.iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect()
    }
}

fn compile_atom(atom: &Atom, schema: &[ColumnSchema]) -> Result<CompiledAtom> {
    let column = schema
        .iter()
        .position(|s| s.name == atom.column)
        .ok_or_else(|| TableError::UnknownColumn(atom.column.clone()))?;
    let col = &schema[column];
    let (values, range, negate) = match &atom.op {
        Operator::Eq { value } => (Some(std::slice::from_ref(value)), None, false),
        Operator::Ne { value } => (Some(std::slice::from_ref(value)), None, true),
        Operator::In { values } => (Some(values.as_slice()), None, false),
        Operator::NotIn { values } => (Some(values.as_slice()), None, true),
        Operator::Range { min, max } => (None, Some((*min, *max)), false),
        Operator::OutsideRange { min, max } => (None, Some((*min, *max)), true),
    };
    if let Some((lo, hi)) = range {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(TableError::Predicate(format!(
                "column {}: range bounds out of order ({lo} > {hi})",
                atom.column
            )));
        }
    }
    let test = if col.is_categorical() {
        let accepted: Vec<bool> = match (values, range) {
            (Some(vals), _) => {
                let labels: Vec<String> = vals.iter().map(Operand::as_label).collect();
                col.categories.iter().map(|c| labels.contains(c)).collect()
            }
            (None, Some((lo, hi))) => col
                .categories
                .iter()
                .map(|c| parse_decimal(c).is_some_and(|x| lo <= x && x <= hi))
                .collect(),
            (None, None) => unreachable!(),
        };
        Test::Categories(accepted)
    } else {
        match (values, range) {
            (Some(vals), _) => {
                let nums = vals
                    .iter()
                    .map(|v| {
                        v.as_number().ok_or_else(|| {
                            TableError::Predicate(format!(
                                "column {} is numeric but operand {:?} is not a number",
                                atom.column, v
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Test::NumIn(nums)
            }
            (None, Some((lo, hi))) => Test::NumRange(lo, hi),
            (None, None) => unreachable!(),
        }
    };
    Ok(CompiledAtom {
        column,
        test,
        negate,
    })
}

/// Rows satisfying every atom, original order preserved.
pub fn filter_rows(t: &Table, p: &FilterPredicate) -> Result<Table> {
    let compiled = p.compile(t.schema())?;
    Ok(t.take_rows(&compiled.matching_rows(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::read_csv;

    fn firms() -> Table {
        let csv = "state,established,age\n\
                   WA,2001,3\n\
                   WA,1999,4\n\
                   OR,2003,3\n\
                   WA,2005,5\n\
                   CA,2000,2\n\
                   WA,2006,3\n";
        read_csv(csv.as_bytes(), None).unwrap()
    }

    #[test]
    fn hand_enumerated_matches() {
        let t = firms();
        let p = FilterPredicate::all([Atom::eq("state", "WA"), Atom::range("established", 2000.0, 2005.0)]);
        let f = filter_rows(&t, &p).unwrap();
        assert_eq!(f.n_rows(), 2);
        assert_eq!(f.display_cell(0, 1), "2001");
        assert_eq!(f.display_cell(1, 1), "2005");
    }

    #[test]
    fn always_true_is_identity() {
        let t = firms();
        assert_eq!(filter_rows(&t, &FilterPredicate::always()).unwrap(), t);
    }

    #[test]
    fn contradiction_is_empty() {
        let t = firms();
        let p = FilterPredicate::all([Atom::eq("age", 3.0), Atom::eq("age", 4.0)]);
        let f = filter_rows(&t, &p).unwrap();
        assert_eq!(f.n_rows(), 0);
        assert_eq!(f.n_cols(), 3);
    }

    #[test]
    fn range_on_categorical_numbers() {
        let t = read_csv("y\n2001\nNR\n1999\n".as_bytes(), None).unwrap();
        let f = filter_rows(&t, &FilterPredicate::all([Atom::range("y", 2000.0, 2010.0)])).unwrap();
        assert_eq!(f.n_rows(), 1);
    }

    #[test]
    fn validation_errors() {
        let t = firms();
        assert!(matches!(
            filter_rows(&t, &FilterPredicate::all([Atom::eq("nope", 1.0)])),
            Err(TableError::UnknownColumn(_))
        ));
        assert!(filter_rows(&t, &FilterPredicate::all([Atom::range("age", 5.0, 1.0)])).is_err());
        assert!(filter_rows(&t, &FilterPredicate::all([Atom::eq("age", "x")])).is_err());
    }

    #[test]
    fn json_form() {
        let json = r#"[{"column":"state","op":"eq","value":"WA"},
                       {"column":"established","op":"range","min":2000,"max":2005},
                       {"column":"age","op":"in","values":[3, "5"]}]"#;
        let p: FilterPredicate = serde_json::from_str(json).unwrap();
        assert_eq!(p.atoms.len(), 3);
        let f = filter_rows(&firms(), &p).unwrap();
        assert_eq!(f.n_rows(), 2);
    }
}
