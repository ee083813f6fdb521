use std::path::PathBuf;

use clap::Args;
use microsynth_core::econ::{replication_report, ReplicationSpec, ReportRow};
use microsynth_core::table::{format_number, ColumnData, ColumnSchema, Table};
use serde_json::json;

use super::{load_table, read_json};
use crate::error::CliError;
use crate::manifest::{write_json, write_table, RunManifest};

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    /// `name=path` pairs. The first dataset is the reference.
    #[arg(long, num_args = 2.., required = true)]
    datasets: Vec<String>,
    /// Replication spec (JSON): recodes, filter and models.
    #[arg(long)]
    model_spec: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_dataset(arg: &str) -> Result<(String, PathBuf), CliError> {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(CliError::Config(format!("--datasets entry {arg:?} is not name=path"))),
    }
}

fn rows_table(rows: &[ReportRow]) -> Table {
    let text = |f: fn(&ReportRow) -> &str| {
        let mut labels: Vec<String> = Vec::new();
        let codes = rows
            .iter()
            .map(|r| {
                let s = f(r);
                match labels.iter().position(|l| l == s) {
                    Some(i) => i as u32,
                    None => {
                        labels.push(s.to_string());
                        (labels.len() - 1) as u32
                    }
                }
            })
            .collect();
        (labels, ColumnData::Categorical(codes))
    };
    let num = |f: fn(&ReportRow) -> f64| ColumnData::Numeric(rows.iter().map(f).collect());
    let (model_l, model) = text(|r| &r.model);
    let (dataset_l, dataset) = text(|r| &r.dataset);
    let (param_l, param) = text(|r| &r.parameter);
    let (class_l, class) = text(|r| &r.classification);
    Table::new(
        vec![
            ColumnSchema::categorical("model", model_l),
            ColumnSchema::categorical("dataset", dataset_l),
            ColumnSchema::categorical("parameter", param_l),
            ColumnSchema::numeric("estimate"),
            ColumnSchema::numeric("se"),
            ColumnSchema::numeric("ci_lo"),
            ColumnSchema::numeric("ci_hi"),
            ColumnSchema::numeric("p"),
            ColumnSchema::categorical("classification", class_l),
        ],
        vec![
            model,
            dataset,
            param,
            num(|r| r.estimate),
            num(|r| r.se),
            num(|r| r.ci_lo),
            num(|r| r.ci_hi),
            num(|r| r.p),
            class,
        ],
    )
    .expect("report columns are consistent")
}

pub fn run(args: ReplicateArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("replicate");
    let spec: ReplicationSpec = read_json(&args.model_spec, "model spec")?;
    let named = args
        .datasets
        .iter()
        .map(|a| parse_dataset(a))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, (name, _)) in named.iter().enumerate() {
        if named[..i].iter().any(|(n, _)| n == name) {
            return Err(CliError::Config(format!("dataset name {name:?} is used twice")));
        }
    }
    let tables = named
        .iter()
        .map(|(_, p)| load_table(p, None))
        .collect::<Result<Vec<_>, _>>()?;
    for (name, path) in &named {
        manifest.input(name, path)?;
    }
    manifest.config("model_spec", &args.model_spec)?;
    manifest.parameters = json!({ "datasets": named.iter().map(|(n, _)| n).collect::<Vec<_>>() });

    let pairs: Vec<(&str, &Table)> = named.iter().map(|(n, _)| n.as_str()).zip(&tables).collect();
    let report = replication_report(&pairs, &spec)?;

    let path = args.out_dir.join("replication.json");
    write_json(&path, &report)?;
    manifest.output("report", &path)?;
    let path = args.out_dir.join("replication.csv");
    write_table(&path, &rows_table(&report.rows()))?;
    manifest.output("table", &path)?;

    for m in &report.models {
        for f in &m.fits {
            if let Some(e) = &f.error {
                eprintln!("microsynth: model {} on {}: {e}", m.model, f.dataset);
            }
        }
    }
    let a = &report.agreement;
    eprintln!(
        "microsynth: {} of {} comparisons agree in sign and significance; {} disjoint intervals",
        a.n_agree,
        a.n_compared,
        a.disjoint.len()
    );
    if let Some(rate) = a.qualitative_agreement_rate {
        eprintln!("microsynth: qualitative agreement {}", format_number(rate));
    }
    manifest.finish(&args.out_dir.join("manifest.json"))?;

    let failed: Vec<&str> = report
        .models
        .iter()
        .filter(|m| m.fits.iter().all(|f| f.result.is_none()))
        .map(|m| m.model.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Fits(format!("no dataset could fit model(s) {}", failed.join(", "))))
    }
}
