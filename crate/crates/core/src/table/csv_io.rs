use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::{
    format_cell, parse_decimal, ColumnData, ColumnKind, ColumnSchema, Result, Table, TableError,
};

/// Loads a CSV file with a mandatory header row.
///
/// With `schema == None` every column is inferred: numeric when it has at
/// least one non-empty cell and every non-empty cell parses as a decimal
/// number, categorical otherwise (categories in first-appearance order).
pub fn load_csv(path: impl AsRef<Path>, schema: Option<&[ColumnSchema]>) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: Option<&[ColumnSchema]>) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let width = header.len();

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); width];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(TableError::Ragged {
                row,
                expected: width,
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            raw[col].push(field.to_string());
        }
    }

    let schema: Vec<ColumnSchema> = match schema {
        Some(declared) => {
            let declared_names: Vec<&str> = declared.iter().map(|s| s.name.as_str()).collect();
            if declared_names != header {
                return Err(TableError::Schema(format!(
                    "header {header:?} does not match declared columns {declared_names:?}"
                )));
            }
            declared.to_vec()
        }
        None => header
            .iter()
            .zip(&raw)
            .map(|(name, cells)| infer_column(name, cells))
            .collect(),
    };

    let columns = schema
        .iter()
        .zip(raw)
        .map(|(s, cells)| encode_column(s, cells).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    Table::from_parts(schema, columns, None)
}

fn infer_column(name: &str, cells: &[String]) -> ColumnSchema {
    let non_empty = cells.iter().filter(|c| !c.is_empty());
    let mut any = false;
    let mut numeric = true;
    for c in non_empty {
        any = true;
        if parse_decimal(c).is_none() {
            numeric = false;
            break;
        }
    }
    if numeric && (any || cells.is_empty()) {
        return ColumnSchema::numeric(name);
    }
    let mut seen = HashMap::new();
    let mut categories = Vec::new();
    for c in cells {
        if !seen.contains_key(c.as_str()) {
            seen.insert(c.as_str(), ());
            categories.push(c.clone());
        }
    }
    ColumnSchema::categorical(name, categories)
}

fn encode_column(schema: &ColumnSchema, cells: Vec<String>) -> Result<ColumnData> {
    match schema.kind {
        ColumnKind::Numeric => cells
            .into_iter()
            .enumerate()
            .map(|(row, v)| {
                parse_decimal(&v).ok_or_else(|| TableError::BadNumber {
                    row,
                    column: schema.name.clone(),
                    value: v,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(ColumnData::Numeric),
        ColumnKind::Categorical => {
            let index: HashMap<&str, u32> = schema
                .categories
                .iter()
                .enumerate()
                .map(|(i, c)| (c.as_str(), i as u32))
                .collect();
            cells
                .iter()
                .enumerate()
                .map(|(row, v)| {
                    index
                        .get(v.as_str())
                        .copied()
                        .ok_or_else(|| TableError::UnknownCategory {
                            row,
                            column: schema.name.clone(),
                            value: v.clone(),
                        })
                })
                .collect::<Result<Vec<_>>>()
                .map(ColumnData::Categorical)
        }
    }
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv_to(table, std::io::BufWriter::new(file))
}

/// Writes the table as RFC 4180 CSV. Numbers use the shortest text that
/// parses back to the identical `f64`.
pub fn write_csv_to<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(writer);
    wtr.write_record(table.column_names())?;
    let mut record = Vec::with_capacity(table.n_cols());
    for row in 0..table.n_rows() {
        record.clear();
        for col in 0..table.n_cols() {
            record.push(format_cell(table.column_schema(col), table.cell(row, col)));
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|source| TableError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}
