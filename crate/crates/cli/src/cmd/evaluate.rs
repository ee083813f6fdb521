use std::path::{Path, PathBuf};

use clap::Args;
use microsynth_core::eval::{
    baseline_score, compare_pca, conditional_compare, k_marginal_score, univariate_compare, worst_features,
    FeatureScore, KMarginalConfig, KMarginalReport, PcaResult, DEFAULT_HOLDOUT_FRACTION,
};
use microsynth_core::table::{ColumnData, ColumnSchema, FilterPredicate, Table};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{drop_columns, load_table, read_json, read_schema};
use crate::error::CliError;
use crate::manifest::{write_json, write_table, RunManifest, SCHEMA_VERSION};
use crate::SchemaArg;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    synthetic: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
    /// Marginal width.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    n_marginals: usize,
    /// Quantile bins for numeric features.
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also score a random holdout split of the original against itself.
    #[arg(long)]
    baseline: bool,
    #[arg(long, default_value_t = DEFAULT_HOLDOUT_FRACTION)]
    baseline_fraction: f64,
    /// Pairwise PCA of each dataset.
    #[arg(long)]
    pca: bool,
    #[arg(long, default_value_t = 5)]
    pca_components: usize,
    /// Figure panel spec (JSON).
    #[arg(long)]
    figures: Option<PathBuf>,
    /// Columns left out of every metric, e.g. weights or identifiers.
    #[arg(long, value_delimiter = ',')]
    ignore: Vec<String>,
    /// Number of worst features listed in kmarginal.json.
    #[arg(long, default_value_t = 10)]
    worst: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Panel {
    Univariate {
        name: String,
        feature: String,
        #[serde(default = "default_bins")]
        bins: usize,
    },
    Conditional {
        name: String,
        filter: FilterPredicate,
        target: String,
    },
}

fn default_bins() -> usize {
    20
}

impl Panel {
    fn name(&self) -> &str {
        match self {
            Panel::Univariate { name, .. } | Panel::Conditional { name, .. } => name,
        }
    }

    fn columns(&self) -> Vec<&str> {
        match self {
            Panel::Univariate { feature, .. } => vec![feature.as_str()],
            Panel::Conditional { filter, target, .. } => {
                let mut c: Vec<&str> = filter.columns().collect();
                c.push(target);
                c
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiguresSpec {
    #[serde(default)]
    panels: Vec<Panel>,
    /// Rows matching this predicate get `highlight_flag = 1` in PCA plot data.
    #[serde(default)]
    pca_highlight: Option<FilterPredicate>,
}

#[derive(Serialize)]
struct KMarginalJson<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a KMarginalReport,
    worst_features: Vec<FeatureScore>,
}

/// Plot data with a text column followed by numeric columns.
fn bar_table(labels: &[String], original: &[f64], synthetic: &[f64]) -> Result<Table, CliError> {
    Table::new(
        vec![
            ColumnSchema::categorical("category", labels.iter().cloned()),
            ColumnSchema::numeric("original_freq"),
            ColumnSchema::numeric("synthetic_freq"),
        ],
        vec![
            ColumnData::Categorical((0..labels.len() as u32).collect()),
            ColumnData::Numeric(original.to_vec()),
            ColumnData::Numeric(synthetic.to_vec()),
        ],
    )
    .map_err(|e| CliError::Output(e.to_string()))
}

fn write_projection(
    dir: &Path,
    dataset: &str,
    source: &Table,
    result: &PcaResult,
    highlight: Option<&FilterPredicate>,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let flags: Vec<f64> = match highlight {
        Some(p) => {
            let compiled = p.compile(source.schema()).map_err(CliError::config)?;
            result
                .rows
                .iter()
                .map(|&r| if compiled.matches_row(source, r) { 1.0 } else { 0.0 })
                .collect()
        }
        None => vec![0.0; result.rows.len()],
    };
    for (i, j) in result.pairs() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = result.projection(i, j).into_iter().unzip();
        let t = Table::new(
            vec![
                ColumnSchema::numeric("pc_i"),
                ColumnSchema::numeric("pc_j"),
                ColumnSchema::numeric("highlight_flag"),
            ],
            vec![ColumnData::Numeric(xs), ColumnData::Numeric(ys), ColumnData::Numeric(flags.clone())],
        )
        .map_err(|e| CliError::Output(e.to_string()))?;
        let path = dir.join(format!("pca_{dataset}_pc{}_pc{}.csv", i + 1, j + 1));
        write_table(&path, &t)?;
        manifest.output("pca_projection", &path)?;
    }
    Ok(())
}

fn check_panel_name(name: &str) -> Result<(), CliError> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "figure panel name {name:?} must be non-empty ASCII letters, digits, '_' or '-'"
        )))
    }
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("evaluate");
    let cfg = KMarginalConfig {
        k: args.k,
        n_marginals: args.n_marginals,
        n_bins: args.bins,
        seed: args.seed,
    };
    let figures: Option<FiguresSpec> = args.figures.as_deref().map(|p| read_json(p, "figure spec")).transpose()?;

    let declared = read_schema(args.schema.schema.as_deref())?;
    let original = load_table(&args.original, declared.as_deref())?;
    // The synthetic file must fit the original's schema.
    let synthetic = load_table(&args.synthetic, Some(original.schema()))?;
    let original = drop_columns(original, &args.ignore)?;
    let synthetic = drop_columns(synthetic, &args.ignore)?;

    if let Some(f) = &figures {
        let mut seen = Vec::new();
        for panel in &f.panels {
            check_panel_name(panel.name())?;
            if seen.contains(&panel.name()) {
                return Err(CliError::Config(format!("figure panel name {:?} is used twice", panel.name())));
            }
            seen.push(panel.name());
            for c in panel.columns() {
                if original.index_of(c).is_none() {
                    return Err(CliError::Config(format!("figure panel {}: unknown column {c}", panel.name())));
                }
            }
        }
        if let Some(h) = &f.pca_highlight {
            h.compile(original.schema()).map_err(|e| CliError::Config(format!("pca_highlight: {e}")))?;
        }
    }

    manifest.input("original", &args.original)?;
    manifest.input("synthetic", &args.synthetic)?;
    if let Some(p) = &args.schema.schema {
        manifest.config("schema", p)?;
    }
    if let Some(p) = &args.figures {
        manifest.config("figures", p)?;
    }
    manifest.master_seed = Some(args.seed);
    manifest.parameters = json!({
        "k": args.k,
        "n_marginals": args.n_marginals,
        "bins": args.bins,
        "baseline": args.baseline,
        "baseline_fraction": args.baseline_fraction,
        "pca": args.pca,
        "pca_components": args.pca_components,
        "ignore": args.ignore,
    });

    let mut report = k_marginal_score(&original, &synthetic, &cfg)?;
    if args.baseline {
        report.baseline_score = Some(baseline_score(&original, &cfg, args.baseline_fraction, args.seed)?);
    }
    let worst = worst_features(&report, args.worst);
    let path = args.out_dir.join("kmarginal.json");
    write_json(
        &path,
        &KMarginalJson {
            schema_version: SCHEMA_VERSION,
            report: &report,
            worst_features: worst,
        },
    )?;
    manifest.output("kmarginal", &path)?;

    if args.pca {
        let cmp = compare_pca(&original, &synthetic, args.pca_components)?;
        let path = args.out_dir.join("pca.json");
        write_json(
            &path,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "n_components": args.pca_components,
                "original": cmp.original,
                "synthetic": cmp.synthetic,
                "share_differences": cmp.share_differences,
            }),
        )?;
        manifest.output("pca", &path)?;
        let highlight = figures.as_ref().and_then(|f| f.pca_highlight.as_ref());
        write_projection(&args.out_dir, "original", &original, &cmp.original, highlight, &mut manifest)?;
        write_projection(&args.out_dir, "synthetic", &synthetic, &cmp.synthetic, highlight, &mut manifest)?;
    }

    if let Some(f) = &figures {
        let mut details = Vec::new();
        for panel in &f.panels {
            let path = args.out_dir.join(format!("{}.csv", panel.name()));
            let table = match panel {
                Panel::Univariate { feature, bins, .. } => {
                    let c = univariate_compare(&original, &synthetic, feature, *bins)?;
                    let t = bar_table(&c.labels, &c.original_freq, &c.synthetic_freq)?;
                    details.push(json!({ "name": panel.name(), "kind": "univariate", "comparison": c }));
                    t
                }
                Panel::Conditional { filter, target, .. } => {
                    let c = conditional_compare(&original, &synthetic, filter, target)?;
                    for w in &c.warnings {
                        eprintln!("microsynth: figure {}: {}", panel.name(), serde_json::to_string(w).unwrap_or_default());
                    }
                    let zeros = vec![0.0; c.labels.len()];
                    let t = bar_table(
                        &c.labels,
                        c.original.frequencies.as_deref().unwrap_or(&zeros),
                        c.synthetic.frequencies.as_deref().unwrap_or(&zeros),
                    )?;
                    details.push(json!({ "name": panel.name(), "kind": "conditional", "comparison": c }));
                    t
                }
            };
            write_table(&path, &table)?;
            manifest.output("figure", &path)?;
        }
        let path = args.out_dir.join("figures.json");
        write_json(&path, &json!({ "schema_version": SCHEMA_VERSION, "panels": details }))?;
        manifest.output("figures", &path)?;
    }

    manifest.finish(&args.out_dir.join("manifest.json"))
}
