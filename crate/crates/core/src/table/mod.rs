//! Columnar microdata tables.
//!
//! A [`Table`] is an immutable set of equally long columns, each described by
//! a [`ColumnSchema`]. Categorical cells are stored as indices into the
//! schema's category list; numeric cells are `f64`. Non-response sentinels
//! such as `"NR"` or `"0"` are ordinary categories.

mod csv_io;
mod filter;
mod recode;
mod summary;

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to};
pub use filter::{filter_rows, Atom, CompiledPredicate, FilterPredicate, Operand, Operator};
pub use recode::{apply_recode, InvalidPolicy, MapGroup, MatchMode, RecodeRule, RecodeSpec};
pub use summary::{summarize, CategoryShare, ColumnSummary};

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: value {value:?} is not a declared category")]
    UnknownCategory {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("column {column}: {message}")]
    Column { column: String, message: String },
    #[error("recode rule for {target}: {message}")]
    Recode { target: String, message: String },
    #[error("invalid predicate: {0}")]
    Predicate(String),
}

pub type Result<T, E = TableError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Ordered category codes. Empty for numeric columns.
    #[serde(default)]
    pub categories: Vec<String>,
    /// Categories flagged as non-response. Reporting only.
    #[serde(default)]
    pub nr_codes: Vec<String>,
    #[serde(default)]
    pub unit_note: String,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
            nr_codes: Vec::new(),
            unit_note: String::new(),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
            nr_codes: Vec::new(),
            unit_note: String::new(),
        }
    }

    pub fn with_nr_codes<S: Into<String>>(mut self, codes: impl IntoIterator<Item = S>) -> Self {
        self.nr_codes = codes.into_iter().map(Into::into).collect();
        self
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    pub fn category_index(&self, label: &str) -> Option<u32> {
        self.categories
            .iter()
            .position(|c| c == label)
            .map(|i| i as u32)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ColumnKind::Numeric => {
                if !self.categories.is_empty() {
                    return Err(TableError::Schema(format!(
                        "numeric column {} declares categories",
                        self.name
                    )));
                }
            }
            ColumnKind::Categorical => {
                let mut seen = HashSet::new();
                for c in &self.categories {
                    if !seen.insert(c.as_str()) {
                        return Err(TableError::Schema(format!(
                            "column {}: duplicate category {c:?}",
                            self.name
                        )));
                    }
                }
                if self.categories.len() > u32::MAX as usize {
                    return Err(TableError::Schema(format!(
                        "column {}: too many categories",
                        self.name
                    )));
                }
            }
        }
        for nr in &self.nr_codes {
            if !self.categories.contains(nr) {
                return Err(TableError::Schema(format!(
                    "column {}: nr code {nr:?} is not a category",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// A single cell value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Cat(u32),
    Num(f64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Cat(c) => c as f64,
            Cell::Num(x) => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Categorical(Vec<u32>),
    Numeric(Vec<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, row: usize) -> Cell {
        match self {
            ColumnData::Categorical(v) => Cell::Cat(v[row]),
            ColumnData::Numeric(v) => Cell::Num(v[row]),
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Categorical(_) => ColumnKind::Categorical,
            ColumnData::Numeric(_) => ColumnKind::Numeric,
        }
    }

    pub fn take(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Categorical(v) => ColumnData::Categorical(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
        }
    }

    /// Builds a column from cells that must all match `kind`.
    pub fn from_cells(kind: ColumnKind, cells: impl IntoIterator<Item = Cell>) -> ColumnData {
        match kind {
            ColumnKind::Categorical => ColumnData::Categorical(
                cells
                    .into_iter()
                    .map(|c| match c {
                        Cell::Cat(i) => i,
                        Cell::Num(_) => panic!("numeric cell in categorical column"),
                    })
                    .collect(),
            ),
            ColumnKind::Numeric => ColumnData::Numeric(
                cells
                    .into_iter()
                    .map(|c| match c {
                        Cell::Num(x) => x,
                        Cell::Cat(_) => panic!("categorical cell in numeric column"),
                    })
                    .collect(),
            ),
        }
    }
}

/// Immutable columnar table. Cloning is cheap: column buffers are shared.
#[derive(Debug, Clone)]
pub struct Table {
    schema: Vec<ColumnSchema>,
    columns: Vec<Arc<ColumnData>>,
    n_rows: usize,
    weight_column: Option<String>,
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.n_rows == other.n_rows
            && self.weight_column == other.weight_column
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| columns_bitwise_equal(a, b))
    }
}

fn columns_bitwise_equal(a: &ColumnData, b: &ColumnData) -> bool {
    match (a, b) {
        (ColumnData::Categorical(x), ColumnData::Categorical(y)) => x == y,
        (ColumnData::Numeric(x), ColumnData::Numeric(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        _ => false,
    }
}

impl Table {
    pub fn new(schema: Vec<ColumnSchema>, columns: Vec<ColumnData>) -> Result<Table> {
        Self::from_shared(schema, columns.into_iter().map(Arc::new).collect(), None)
    }

    fn from_shared(
        schema: Vec<ColumnSchema>,
        columns: Vec<Arc<ColumnData>>,
        weight_column: Option<String>,
    ) -> Result<Table> {
        if schema.len() != columns.len() {
            return Err(TableError::Schema(format!(
                "{} schema entries for {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let mut names = HashSet::new();
        for s in &schema {
            s.validate()?;
            if !names.insert(s.name.as_str()) {
                return Err(TableError::Schema(format!("duplicate column name {}", s.name)));
            }
        }
        let n_rows = columns.first().map_or(0, |c| c.len());
        for (s, c) in schema.iter().zip(&columns) {
            if c.len() != n_rows {
                return Err(TableError::Column {
                    column: s.name.clone(),
                    message: format!("length {} differs from {}", c.len(), n_rows),
                });
            }
            if c.kind() != s.kind {
                return Err(TableError::Column {
                    column: s.name.clone(),
                    message: "data kind does not match schema".into(),
                });
            }
            if let ColumnData::Categorical(v) = c.as_ref() {
                let n_cat = s.categories.len() as u32;
                if let Some(row) = v.iter().position(|&i| i >= n_cat) {
                    return Err(TableError::Column {
                        column: s.name.clone(),
                        message: format!("row {row}: category index out of range"),
                    });
                }
            }
        }
        let table = Table {
            schema,
            columns,
            n_rows,
            weight_column: None,
        };
        match weight_column {
            Some(w) => table.with_weight_column(&w),
            None => Ok(table),
        }
    }

    /// Marks `name` as the per-record weight column. Weights must be finite and positive.
    pub fn with_weight_column(mut self, name: &str) -> Result<Table> {
        let idx = self.require_index(name)?;
        match self.columns[idx].as_ref() {
            ColumnData::Numeric(w) => {
                if let Some(row) = w.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(TableError::Column {
                        column: name.to_string(),
                        message: format!("row {row}: weight must be finite and > 0"),
                    });
                }
            }
            ColumnData::Categorical(_) => {
                return Err(TableError::Column {
                    column: name.to_string(),
                    message: "weight column must be numeric".into(),
                })
            }
        }
        self.weight_column = Some(name.to_string());
        Ok(self)
    }

    pub fn without_weight_column(mut self) -> Table {
        self.weight_column = None;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn column_schema(&self, idx: usize) -> &ColumnSchema {
        &self.schema[idx]
    }

    pub fn column(&self, idx: usize) -> &ColumnData {
        &self.columns[idx]
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.schema.iter().map(|s| s.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn require_index(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))
    }

    pub fn column_by_name(&self, name: &str) -> Option<(&ColumnSchema, &ColumnData)> {
        self.index_of(name)
            .map(|i| (&self.schema[i], self.columns[i].as_ref()))
    }

    pub fn weight_column(&self) -> Option<&str> {
        self.weight_column.as_deref()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        let idx = self.index_of(self.weight_column.as_deref()?)?;
        match self.columns[idx].as_ref() {
            ColumnData::Numeric(w) => Some(w),
            ColumnData::Categorical(_) => None,
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.columns[col].get(row)
    }

    /// Text form of a cell as it would appear in CSV.
    pub fn display_cell(&self, row: usize, col: usize) -> String {
        format_cell(&self.schema[col], self.cell(row, col))
    }

    /// New table holding the given rows, in the given order.
    pub fn take_rows(&self, rows: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| Arc::new(c.take(rows))).collect(),
            n_rows: rows.len(),
            weight_column: self.weight_column.clone(),
        }
    }

    /// Appends a column. Fails if the name is taken or the length differs.
    pub fn with_column(&self, schema: ColumnSchema, data: ColumnData) -> Result<Table> {
        if self.index_of(&schema.name).is_some() {
            return Err(TableError::Schema(format!(
                "column {} already exists",
                schema.name
            )));
        }
        if !self.columns.is_empty() && data.len() != self.n_rows {
            return Err(TableError::Column {
                column: schema.name,
                message: format!("length {} differs from {}", data.len(), self.n_rows),
            });
        }
        let mut s = self.schema.clone();
        let mut c = self.columns.clone();
        s.push(schema);
        c.push(Arc::new(data));
        Self::from_shared(s, c, self.weight_column.clone())
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Table> {
        let mut schema = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for n in names {
            let i = self.require_index(n)?;
            schema.push(self.schema[i].clone());
            columns.push(Arc::clone(&self.columns[i]));
        }
        let weight = self
            .weight_column
            .clone()
            .filter(|w| names.contains(&w.as_str()));
        let mut t = Self::from_shared(schema, columns, weight)?;
        if t.columns.is_empty() {
            t.n_rows = 0;
        }
        Ok(t)
    }

    pub(crate) fn from_parts(
        schema: Vec<ColumnSchema>,
        columns: Vec<Arc<ColumnData>>,
        weight_column: Option<String>,
    ) -> Result<Table> {
        Self::from_shared(schema, columns, weight_column)
    }
}

pub(crate) fn format_cell(schema: &ColumnSchema, cell: Cell) -> String {
    match cell {
        Cell::Cat(i) => schema.categories[i as usize].clone(),
        Cell::Num(x) => format_number(x),
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Categorical => f.write_str("categorical"),
            ColumnKind::Numeric => f.write_str("numeric"),
        }
    }
}

/// Parses a cell of a numeric column. Accepts plain decimal and exponent
/// notation only; `inf`, `NaN` and blanks are rejected.
pub(crate) fn parse_decimal(s: &str) -> Option<f64> {
    if s.is_empty()
        || !s
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'))
        || !s.bytes().any(|b| b.is_ascii_digit())
    {
        return None;
    }
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}
