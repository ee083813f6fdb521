use std::path::PathBuf;

use clap::Args;
use microsynth_core::cart::{synthesize, SynthesisConfig};
use serde_json::{json, Value};

use super::{load_table, read_json, read_schema};
use crate::error::CliError;
use crate::manifest::{manifest_path, write_json, write_table, RunManifest};
use crate::SchemaArg;

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Original CSV.
    #[arg(long)]
    input: PathBuf,
    /// Synthesis config JSON. `n_synthetic_rows` defaults to the input's row count.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's row count.
    #[arg(long)]
    rows: Option<usize>,
    /// Synthetic CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Fitted model bundle (JSON).
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

/// Splits the CLI-only keys off a config object and fills in row count and seed.
fn resolve_config(raw: Value, rows: usize, args: &SynthesizeArgs) -> Result<(SynthesisConfig, Option<String>), CliError> {
    let Value::Object(mut map) = raw else {
        return Err(CliError::Config(format!("{}: config must be a JSON object", args.config.display())));
    };
    if let Some(v) = map.remove("schema_version") {
        if v != json!(1) {
            return Err(CliError::Config(format!("{}: unsupported schema_version {v}", args.config.display())));
        }
    }
    let weight = match map.remove("weight_column") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(v) => return Err(CliError::Config(format!("weight_column must be a string, found {v}"))),
    };
    if let Some(r) = args.rows {
        map.insert("n_synthetic_rows".into(), json!(r));
    }
    map.entry("n_synthetic_rows").or_insert(json!(rows));
    if let Some(s) = args.seed {
        map.insert("master_seed".into(), json!(s));
    }
    let cfg = serde_json::from_value(Value::Object(map))
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    Ok((cfg, weight))
}

pub fn run(args: SynthesizeArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("synthesize");
    let raw: Value = read_json(&args.config, "config")?;
    let schema = read_schema(args.schema.schema.as_deref())?;
    let mut table = load_table(&args.input, schema.as_deref())?;
    let (cfg, weight) = resolve_config(raw, table.n_rows(), &args)?;
    if let Some(w) = &weight {
        table = table.with_weight_column(w).map_err(CliError::config)?;
    }

    manifest.input("original", &args.input)?;
    manifest.config("synthesis_config", &args.config)?;
    if let Some(p) = &args.schema.schema {
        manifest.config("schema", p)?;
    }
    manifest.master_seed = Some(cfg.master_seed);
    manifest.parameters = json!({
        "n_synthetic_rows": cfg.n_synthetic_rows,
        "weighted": cfg.weighted,
        "weight_column": weight,
    });

    let out = synthesize(&table, &cfg)?;
    write_table(&args.out, &out.table)?;
    manifest.output("synthetic", &args.out)?;
    if let Some(p) = &args.model_out {
        write_json(p, &out.model)?;
        manifest.output("model", p)?;
    }
    let c = &out.model.consistency;
    if c.rows_dropped > 0 {
        eprintln!(
            "microsynth: dropped {} synthetic rows that violated consistency rules after repair",
            c.rows_dropped
        );
    }
    manifest.finish(&manifest_path(&args.out, args.manifest.as_ref()))
}
