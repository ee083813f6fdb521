use std::path::PathBuf;

use clap::Args;
use microsynth_core::cart::exact_match_audit;
use serde_json::json;

use super::{load_table, read_schema};
use crate::error::CliError;
use crate::manifest::{manifest_path, write_json, RunManifest, SCHEMA_VERSION};
use crate::SchemaArg;

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    synthetic: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
    /// Quasi-identifier columns, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    columns: Vec<String>,
    /// Audit JSON to write.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: AuditArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("audit");
    let declared = read_schema(args.schema.schema.as_deref())?;
    let original = load_table(&args.original, declared.as_deref())?;
    let synthetic = load_table(&args.synthetic, None)?;
    for c in &args.columns {
        for (t, p) in [(&original, &args.original), (&synthetic, &args.synthetic)] {
            if t.index_of(c).is_none() {
                return Err(CliError::Config(format!("{}: unknown column {c}", p.display())));
            }
        }
    }
    manifest.input("original", &args.original)?;
    manifest.input("synthetic", &args.synthetic)?;
    manifest.parameters = json!({ "columns": args.columns });

    let cols: Vec<&str> = args.columns.iter().map(String::as_str).collect();
    let audit = exact_match_audit(&original, &synthetic, &cols)?;
    write_json(
        &args.out,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "columns": args.columns,
            "match_rate": audit.match_rate,
            "unique_match_rate": audit.unique_match_rate,
            "n_synthetic": audit.n_synthetic,
        }),
    )?;
    manifest.output("audit", &args.out)?;
    manifest.finish(&manifest_path(&args.out, None))
}
