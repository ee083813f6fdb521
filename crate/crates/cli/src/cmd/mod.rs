pub mod audit;
pub mod evaluate;
pub mod replicate;
pub mod summarize;
pub mod synthesize;

use std::fs;
use std::path::Path;

use microsynth_core::table::{load_csv, ColumnSchema, Table};
use serde::de::DeserializeOwned;

use crate::error::CliError;

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{what} {}: {e}", path.display())))
}

pub fn read_schema(path: Option<&Path>) -> Result<Option<Vec<ColumnSchema>>, CliError> {
    path.map(|p| read_json(p, "schema")).transpose()
}

pub fn load_table(path: &Path, schema: Option<&[ColumnSchema]>) -> Result<Table, CliError> {
    load_csv(path, schema).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Drops the named columns, erroring on names the table lacks.
pub fn drop_columns(t: Table, names: &[String]) -> Result<Table, CliError> {
    if names.is_empty() {
        return Ok(t);
    }
    for n in names {
        if t.index_of(n).is_none() {
            return Err(CliError::Config(format!("unknown column {n}")));
        }
    }
    let keep: Vec<String> = t.column_names().filter(|c| !names.iter().any(|n| n == c)).map(String::from).collect();
    let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
    t.select(&keep).map_err(CliError::config)
}
