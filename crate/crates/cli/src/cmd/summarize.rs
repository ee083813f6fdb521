use std::path::PathBuf;

use clap::Args;
use microsynth_core::econ::ReplicationSpec;
use microsynth_core::table::{apply_recode, filter_rows, summarize};
use serde_json::json;

use super::{load_table, read_json, read_schema};
use crate::error::CliError;
use crate::manifest::{manifest_path, write_json, RunManifest, SCHEMA_VERSION};
use crate::SchemaArg;

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
    /// Replication spec whose recodes and filter are applied first.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Columns to summarize, comma separated. Defaults to every column.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    /// Weight every statistic by this column.
    #[arg(long)]
    weight_column: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: SummarizeArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("summarize");
    let declared = read_schema(args.schema.schema.as_deref())?;
    let spec: Option<ReplicationSpec> = args.spec.as_deref().map(|p| read_json(p, "spec")).transpose()?;
    let mut t = load_table(&args.input, declared.as_deref())?;
    let n_input = t.n_rows();
    if let Some(s) = &spec {
        t = apply_recode(&t, &s.recodes).map_err(CliError::config)?;
        t = filter_rows(&t, &s.filter).map_err(CliError::config)?;
    }
    if let Some(w) = &args.weight_column {
        t = t.with_weight_column(w).map_err(CliError::config)?;
    }
    let columns: Vec<String> = if args.columns.is_empty() {
        t.column_names().map(String::from).collect()
    } else {
        args.columns.clone()
    };
    for c in &columns {
        if t.index_of(c).is_none() {
            return Err(CliError::Config(format!("unknown column {c}")));
        }
    }

    manifest.input("input", &args.input)?;
    if let Some(p) = &args.spec {
        manifest.config("spec", p)?;
    }
    manifest.parameters = json!({ "columns": columns, "weight_column": args.weight_column });

    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let summary = summarize(&t, &cols, args.weight_column.is_some()).map_err(CliError::data)?;
    write_json(
        &args.out,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "n_input_rows": n_input,
            "n_rows": t.n_rows(),
            "weighted": args.weight_column.is_some(),
            "columns": summary,
        }),
    )?;
    manifest.output("summary", &args.out)?;
    manifest.finish(&manifest_path(&args.out, None))
}
