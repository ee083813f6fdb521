use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_tree, DecisionTree, Result, SynthError, TreeParams};
use crate::rng::{cumulative, draw_cumulative, StreamRng};
use crate::table::{Cell, ColumnData, CompiledPredicate, FilterPredicate, Table};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

const STAGE_COLUMN: u64 = 1;
const STAGE_CARRY: u64 = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnMode {
    #[default]
    Synthesize,
    /// Copied from observed rows, bootstrapped jointly as one block.
    CarryObserved,
}

fn default_limit() -> usize {
    20
}

/// `require` must hold for every synthetic row where `when` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRule {
    pub name: String,
    #[serde(default)]
    pub when: FilterPredicate,
    pub require: FilterPredicate,
    /// Columns redrawn on violation. Defaults to the synthesized columns the rule mentions.
    #[serde(default)]
    pub resample: Vec<String>,
    #[serde(default = "default_limit")]
    pub limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Synthesis order. Empty means schema order.
    #[serde(default)]
    pub visit_order: Vec<String>,
    #[serde(default)]
    pub tree_params: TreeParams,
    /// Per-column overrides of `tree_params`.
    #[serde(default)]
    pub column_params: BTreeMap<String, TreeParams>,
    #[serde(default)]
    pub modes: BTreeMap<String, ColumnMode>,
    /// Lets carried columns serve as predictors for synthesized ones.
    #[serde(default)]
    pub carried_as_predictors: bool,
    #[serde(default)]
    pub consistency_rules: Vec<ConsistencyRule>,
    pub n_synthetic_rows: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub weighted: bool,
}

impl SynthesisConfig {
    pub fn new(n_synthetic_rows: usize, master_seed: u64) -> Self {
        SynthesisConfig {
            visit_order: Vec::new(),
            tree_params: TreeParams::default(),
            column_params: BTreeMap::new(),
            modes: BTreeMap::new(),
            carried_as_predictors: false,
            consistency_rules: Vec::new(),
            n_synthetic_rows,
            master_seed,
            weighted: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub rows_violating: usize,
    pub rows_repaired: usize,
    pub rows_dropped: usize,
    /// Initial violations by rule name.
    pub violations_by_rule: BTreeMap<String, usize>,
}

/// Everything needed to audit a synthesis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisModel {
    pub schema_version: u32,
    pub master_seed: u64,
    pub n_synthetic_rows: usize,
    pub weighted: bool,
    pub visit_order: Vec<String>,
    pub carried: Vec<String>,
    /// One tree per synthesized column, in visit order.
    pub trees: Vec<DecisionTree>,
    pub consistency: ConsistencyReport,
}

impl SynthesisModel {
    /// Smallest donor pool across all trees.
    pub fn min_donor_pool(&self) -> Option<usize> {
        self.trees.iter().map(DecisionTree::min_donor_pool).min()
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisOutput {
    pub table: Table,
    pub model: SynthesisModel,
}

struct Plan {
    visit: Vec<usize>,
    carried: Vec<usize>,
    predictors: Vec<Vec<usize>>,
    weight_col: Option<usize>,
}

fn plan(t: &Table, cfg: &SynthesisConfig) -> Result<Plan> {
    let weight_col = if cfg.weighted {
        let name = t.weight_column().ok_or_else(|| {
            SynthError::Config("weighted synthesis requested but the table has no weight column".into())
        })?;
        Some(t.require_index(name)?)
    } else {
        None
    };
    for name in cfg.modes.keys().chain(cfg.column_params.keys()) {
        t.require_index(name)?;
    }
    let carried: Vec<usize> = (0..t.n_cols())
        .filter(|&c| Some(c) != weight_col)
        .filter(|&c| cfg.modes.get(&t.column_schema(c).name) == Some(&ColumnMode::CarryObserved))
        .collect();
    let synthesizable = |c: usize| Some(c) != weight_col && !carried.contains(&c);

    let visit: Vec<usize> = if cfg.visit_order.is_empty() {
        (0..t.n_cols()).filter(|&c| synthesizable(c)).collect()
    } else {
        let mut visit = Vec::with_capacity(cfg.visit_order.len());
        for name in &cfg.visit_order {
            let c = t
                .index_of(name)
                .ok_or_else(|| SynthError::Config(format!("visit_order names unknown column {name}")))?;
            if !synthesizable(c) {
                return Err(SynthError::Config(format!(
                    "visit_order names {name}, which is carried or is the weight column"
                )));
            }
            if visit.contains(&c) {
                return Err(SynthError::Config(format!("visit_order lists {name} twice")));
            }
            visit.push(c);
        }
        if let Some(missing) = (0..t.n_cols()).find(|&c| synthesizable(c) && !visit.contains(&c)) {
            return Err(SynthError::Config(format!(
                "column {} is neither in visit_order nor carried",
                t.column_schema(missing).name
            )));
        }
        visit
    };

    let predictors = (0..visit.len())
        .map(|j| {
            let mut p: Vec<usize> = visit[..j].to_vec();
            if cfg.carried_as_predictors {
                p.extend(&carried);
            }
            p.sort_unstable();
            p
        })
        .collect();

    Ok(Plan {
        visit,
        carried,
        predictors,
        weight_col,
    })
}

struct CompiledRule {
    name: String,
    when: CompiledPredicate,
    require: CompiledPredicate,
    resample: Vec<usize>,
    limit: usize,
}

impl CompiledRule {
    fn holds(&self, row: &[Cell]) -> bool {
        !self.when.matches(|c| row[c]) || self.require.matches(|c| row[c])
    }
}

fn compile_rules(t: &Table, cfg: &SynthesisConfig, plan: &Plan) -> Result<Vec<CompiledRule>> {
    cfg.consistency_rules
        .iter()
        .map(|r| {
            if r.limit < 1 {
                return Err(SynthError::Config(format!("rule {}: limit must be at least 1", r.name)));
            }
            let when = r.when.compile(t.schema())?;
            let require = r.require.compile(t.schema())?;
            let named: Vec<usize> = if r.resample.is_empty() {
                when.column_indices()
                    .into_iter()
                    .chain(require.column_indices())
                    .collect()
            } else {
                r.resample
                    .iter()
                    .map(|n| t.require_index(n).map_err(SynthError::from))
                    .collect::<Result<_>>()?
            };
            if let Some(&bad) = named.iter().find(|c| !plan.visit.contains(c)) {
                if !r.resample.is_empty() {
                    return Err(SynthError::Config(format!(
                        "rule {}: {} is not a synthesized column",
                        r.name,
                        t.column_schema(bad).name
                    )));
                }
            }
            // Resample in visit order so predictors are redrawn before dependents.
            let resample = plan.visit.iter().copied().filter(|c| named.contains(c)).collect();
            Ok(CompiledRule {
                name: r.name.clone(),
                when,
                require,
                resample,
                limit: r.limit,
            })
        })
        .collect()
}

struct Sampler<'a> {
    t: &'a Table,
    plan: &'a Plan,
    trees: &'a [DecisionTree],
    seed: u64,
    carry_cumulative: Option<Vec<f64>>,
}

impl Sampler<'_> {
    fn carry_donor(&self, row: usize, attempt: u64) -> usize {
        let mut rng = StreamRng::new(self.seed, &[STAGE_CARRY, row as u64, attempt]);
        match &self.carry_cumulative {
            Some(cum) => draw_cumulative(&mut rng, cum),
            None => rng.index(self.t.n_rows()),
        }
    }

    fn draw(&self, tree: &DecisionTree, row: usize, attempt: u64, cell: impl Fn(usize) -> Cell) -> Cell {
        let leaf = tree.route_with(cell);
        let mut rng = StreamRng::new(
            self.seed,
            &[STAGE_COLUMN, tree.target_column as u64, row as u64, attempt],
        );
        tree.sample_from_leaf(leaf, &mut rng)
    }

    fn tree_for(&self, col: usize) -> &DecisionTree {
        let k = self.plan.visit.iter().position(|&c| c == col).expect("synthesized column");
        &self.trees[k]
    }

    fn redraw_row(&self, row: usize, attempt: u64, cells: &mut [Cell]) {
        if !self.plan.carried.is_empty() {
            let donor = self.carry_donor(row, attempt);
            for &c in &self.plan.carried {
                cells[c] = self.t.cell(donor, c);
            }
        }
        for tree in self.trees {
            let v = self.draw(tree, row, attempt, |c| cells[c]);
            cells[tree.target_column] = v;
        }
    }

    /// Repairs a violating row. Returns the failing rule index if the row cannot be fixed.
    fn repair(&self, row: usize, mut cells: Vec<Cell>, rules: &[CompiledRule]) -> Result<Vec<Cell>, usize> {
        let first_violation = |cells: &[Cell]| rules.iter().position(|r| !r.holds(cells));
        let max_redraws = rules.iter().map(|r| r.limit).max().unwrap_or(1);
        let mut attempt: u64 = 0;
        let mut last_failed = 0;
        for redraw in 0..=max_redraws {
            if redraw > 0 {
                attempt += 1;
                self.redraw_row(row, attempt, &mut cells);
            }
            let mut cycles = 0;
            loop {
                let Some(k) = first_violation(&cells) else {
                    return Ok(cells);
                };
                last_failed = k;
                if cycles >= rules[k].limit || rules[k].resample.is_empty() {
                    break;
                }
                cycles += 1;
                attempt += 1;
                for &col in &rules[k].resample {
                    let v = self.draw(self.tree_for(col), row, attempt, |c| cells[c]);
                    cells[col] = v;
                }
            }
        }
        Err(last_failed)
    }
}

/// Generates a synthetic table from `t`.
///
/// The result depends only on `(t, cfg)`: each value is drawn from a random
/// stream keyed by `(master_seed, column, row, attempt)`, so the output is
/// identical at any thread count.
pub fn synthesize(t: &Table, cfg: &SynthesisConfig) -> Result<SynthesisOutput> {
    if t.n_rows() == 0 {
        return Err(SynthError::Config("cannot synthesize from an empty table".into()));
    }
    cfg.tree_params.validate()?;
    let plan = plan(t, cfg)?;
    let rules = compile_rules(t, cfg, &plan)?;

    let trees = plan
        .visit
        .iter()
        .zip(&plan.predictors)
        .map(|(&col, preds)| {
            let name = &t.column_schema(col).name;
            let params = cfg.column_params.get(name).unwrap_or(&cfg.tree_params);
            let pred_names: Vec<&str> = preds.iter().map(|&p| t.column_schema(p).name.as_str()).collect();
            fit_tree(t, name, &pred_names, params, cfg.weighted)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = cfg.n_synthetic_rows;
    let sampler = Sampler {
        t,
        plan: &plan,
        trees: &trees,
        seed: cfg.master_seed,
        carry_cumulative: if cfg.weighted {
            t.weights().map(|w| cumulative(w.iter().copied()))
        } else {
            None
        },
    };

    let mut columns: Vec<Option<ColumnData>> = vec![None; t.n_cols()];
    if !plan.carried.is_empty() {
        let donors: Vec<usize> = (0..n).into_par_iter().map(|r| sampler.carry_donor(r, 0)).collect();
        for &c in &plan.carried {
            columns[c] = Some(t.column(c).take(&donors));
        }
    }
    for tree in &trees {
        let col = tree.target_column;
        let values: Vec<Cell> = {
            let built = &columns;
            (0..n)
                .into_par_iter()
                .map(|r| sampler.draw(tree, r, 0, |c| built[c].as_ref().expect("predictor generated").get(r)))
                .collect()
        };
        columns[col] = Some(ColumnData::from_cells(t.column_schema(col).kind, values));
    }
    if let Some(w) = plan.weight_col {
        columns[w] = Some(ColumnData::Numeric(vec![f64::NAN; n]));
    }
    let mut columns: Vec<ColumnData> = columns.into_iter().map(|c| c.expect("every column generated")).collect();

    let mut report = ConsistencyReport::default();
    let mut keep: Option<Vec<usize>> = None;
    if !rules.is_empty() && n > 0 {
        let row_cells = |r: usize, cols: &[ColumnData]| -> Vec<Cell> { cols.iter().map(|c| c.get(r)).collect() };
        let violating: Vec<(usize, usize)> = (0..n)
            .into_par_iter()
            .filter_map(|r| {
                let cells = row_cells(r, &columns);
                rules.iter().position(|rule| !rule.holds(&cells)).map(|k| (r, k))
            })
            .collect();
        for &(_, k) in &violating {
            *report.violations_by_rule.entry(rules[k].name.clone()).or_default() += 1;
        }
        report.rows_violating = violating.len();
        let repaired: Vec<(usize, Result<Vec<Cell>, usize>)> = violating
            .par_iter()
            .map(|&(r, _)| (r, sampler.repair(r, row_cells(r, &columns), &rules)))
            .collect();
        let mut failed = Vec::new();
        let mut failed_rule = None;
        for (r, outcome) in repaired {
            match outcome {
                Ok(cells) => {
                    report.rows_repaired += 1;
                    for (col, cell) in columns.iter_mut().zip(cells) {
                        set_cell(col, r, cell);
                    }
                }
                Err(k) => {
                    failed.push(r);
                    failed_rule.get_or_insert(k);
                }
            }
        }
        if failed.len() * 100 > n {
            return Err(SynthError::ConsistencyAbort {
                rule: rules[failed_rule.unwrap_or(0)].name.clone(),
                failed: failed.len(),
                n_rows: n,
            });
        }
        if !failed.is_empty() {
            report.rows_dropped = failed.len();
            keep = Some((0..n).filter(|r| failed.binary_search(r).is_err()).collect());
        }
    }

    let n_out = keep.as_ref().map_or(n, Vec::len);
    if let Some(w) = plan.weight_col {
        let total: f64 = t.weights().map_or(0.0, |w| w.iter().sum());
        columns[w] = ColumnData::Numeric(vec![total / n_out.max(1) as f64; n]);
    }
    let mut table = Table::new(t.schema().to_vec(), columns)?;
    if let Some(rows) = &keep {
        table = table.take_rows(rows);
    }
    if let Some(w) = t.weight_column() {
        if n_out > 0 && cfg.weighted {
            table = table.with_weight_column(w)?;
        }
    }

    let name = |c: &usize| t.column_schema(*c).name.clone();
    Ok(SynthesisOutput {
        table,
        model: SynthesisModel {
            schema_version: MODEL_SCHEMA_VERSION,
            master_seed: cfg.master_seed,
            n_synthetic_rows: n_out,
            weighted: cfg.weighted,
            visit_order: plan.visit.iter().map(name).collect(),
            carried: plan.carried.iter().map(name).collect(),
            trees,
            consistency: report,
        },
    })
}

fn set_cell(col: &mut ColumnData, row: usize, cell: Cell) {
    match (col, cell) {
        (ColumnData::Categorical(v), Cell::Cat(c)) => v[row] = c,
        (ColumnData::Numeric(v), Cell::Num(x)) => v[row] = x,
        _ => unreachable!("cell kind matches column kind"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Atom, ColumnSchema};

    fn pair_table() -> Table {
        let a: Vec<f64> = (0..120).map(|i| f64::from(i % 12)).collect();
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        Table::new(
            vec![ColumnSchema::numeric("A"), ColumnSchema::numeric("B")],
            vec![ColumnData::Numeric(a), ColumnData::Numeric(b)],
        )
        .unwrap()
    }

    #[test]
    fn constant_column_stays_constant() {
        let t = Table::new(vec![ColumnSchema::numeric("c")], vec![ColumnData::Numeric(vec![4.5; 10])]).unwrap();
        let out = synthesize(&t, &SynthesisConfig::new(37, 1)).unwrap();
        assert_eq!(out.table.n_rows(), 37);
        assert!((0..37).all(|r| out.table.cell(r, 0) == Cell::Num(4.5)));
    }

    #[test]
    fn functional_tie_survives() {
        let t = pair_table();
        let mut cfg = SynthesisConfig::new(500, 9);
        cfg.tree_params.min_leaf = 1;
        let out = synthesize(&t, &cfg).unwrap();
        for r in 0..500 {
            assert_eq!(out.table.cell(r, 1).as_f64(), 2.0 * out.table.cell(r, 0).as_f64());
        }
    }

    #[test]
    fn zero_rows() {
        let out = synthesize(&pair_table(), &SynthesisConfig::new(0, 1)).unwrap();
        assert_eq!(out.table.n_rows(), 0);
        assert_eq!(out.table.n_cols(), 2);
    }

    #[test]
    fn visit_order_validation() {
        let t = pair_table();
        let mut cfg = SynthesisConfig::new(5, 1);
        cfg.visit_order = vec!["A".into()];
        assert!(matches!(synthesize(&t, &cfg), Err(SynthError::Config(_))));
        cfg.visit_order = vec!["A".into(), "A".into()];
        assert!(matches!(synthesize(&t, &cfg), Err(SynthError::Config(_))));
        cfg.visit_order = vec!["B".into(), "Z".into()];
        assert!(matches!(synthesize(&t, &cfg), Err(SynthError::Config(_))));
        cfg.visit_order = vec!["B".into(), "A".into()];
        let out = synthesize(&t, &cfg).unwrap();
        assert_eq!(out.model.visit_order, vec!["B", "A"]);
        assert!(out.model.trees[0].predictors.is_empty());
        assert_eq!(out.model.trees[1].predictors, vec!["B"]);
    }

    #[test]
    fn carried_columns_keep_observed_rows() {
        let t = pair_table();
        let mut cfg = SynthesisConfig::new(200, 3);
        cfg.modes.insert("A".into(), ColumnMode::CarryObserved);
        cfg.modes.insert("B".into(), ColumnMode::CarryObserved);
        let out = synthesize(&t, &cfg).unwrap();
        assert!(out.model.trees.is_empty());
        for r in 0..200 {
            assert_eq!(out.table.cell(r, 1).as_f64(), 2.0 * out.table.cell(r, 0).as_f64());
        }
    }

    #[test]
    fn carried_predictors() {
        let t = pair_table();
        let mut cfg = SynthesisConfig::new(200, 3);
        cfg.tree_params.min_leaf = 1;
        cfg.modes.insert("A".into(), ColumnMode::CarryObserved);
        cfg.carried_as_predictors = true;
        let out = synthesize(&t, &cfg).unwrap();
        assert_eq!(out.model.trees[0].predictors, vec!["A"]);
        for r in 0..200 {
            assert_eq!(out.table.cell(r, 1).as_f64(), 2.0 * out.table.cell(r, 0).as_f64());
        }
    }

    #[test]
    fn consistency_rule_repairs_rows() {
        // Independent columns; require A < 6 whenever B >= 12.
        let a: Vec<f64> = (0..120).map(|i| f64::from(i % 12)).collect();
        let b: Vec<f64> = (0..120).map(|i| f64::from((i / 12) * 2)).collect();
        let t = Table::new(
            vec![ColumnSchema::numeric("A"), ColumnSchema::numeric("B")],
            vec![ColumnData::Numeric(a), ColumnData::Numeric(b)],
        )
        .unwrap();
        let mut cfg = SynthesisConfig::new(400, 5);
        cfg.consistency_rules.push(ConsistencyRule {
            name: "a_small_when_b_big".into(),
            when: FilterPredicate::all([Atom::range("B", 12.0, 1e9)]),
            require: FilterPredicate::all([Atom::range("A", -1e9, 5.0)]),
            resample: vec!["A".into()],
            limit: 20,
        });
        let out = synthesize(&t, &cfg).unwrap();
        assert!(out.model.consistency.rows_violating > 0);
        assert_eq!(out.model.consistency.rows_dropped, 0);
        for r in 0..out.table.n_rows() {
            let (a, b) = (out.table.cell(r, 0).as_f64(), out.table.cell(r, 1).as_f64());
            assert!(b < 12.0 || a <= 5.0);
        }
    }

    #[test]
    fn impossible_rule_aborts() {
        let t = pair_table();
        let mut cfg = SynthesisConfig::new(100, 5);
        cfg.consistency_rules.push(ConsistencyRule {
            name: "never".into(),
            when: FilterPredicate::always(),
            require: FilterPredicate::all([Atom::eq("A", 100.0)]),
            resample: vec![],
            limit: 2,
        });
        assert!(matches!(
            synthesize(&t, &cfg),
            Err(SynthError::ConsistencyAbort { failed: 100, .. })
        ));
    }

    #[test]
    fn weighted_synthesis_uses_weights() {
        let t = Table::new(
            vec![ColumnSchema::categorical("y", ["A", "B"]), ColumnSchema::numeric("w")],
            vec![ColumnData::Categorical(vec![0, 1]), ColumnData::Numeric(vec![3.0, 1.0])],
        )
        .unwrap()
        .with_weight_column("w")
        .unwrap();
        let mut cfg = SynthesisConfig::new(20_000, 8);
        cfg.weighted = true;
        cfg.tree_params.min_leaf = 1;
        let out = synthesize(&t, &cfg).unwrap();
        let a = (0..20_000).filter(|&r| out.table.cell(r, 0) == Cell::Cat(0)).count();
        assert!((a as f64 / 20_000.0 - 0.75).abs() < 0.015);
        assert_eq!(out.table.cell(0, 1), Cell::Num(4.0 / 20_000.0));
        assert_eq!(out.table.weight_column(), Some("w"));
    }

    #[test]
    fn config_json() {
        let cfg: SynthesisConfig = serde_json::from_str(
            r#"{"n_synthetic_rows": 10, "master_seed": 3,
                "visit_order": ["B", "A"],
                "tree_params": {"min_leaf": 2},
                "column_params": {"A": {"max_depth": 4}},
                "modes": {"A": "synthesize"},
                "consistency_rules": [{"name": "r", "require": [{"column": "A", "op": "ne", "value": 1}]}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.tree_params.min_leaf, 2);
        assert_eq!(cfg.tree_params.max_depth, 30);
        assert_eq!(cfg.consistency_rules[0].limit, 20);
        assert!(serde_json::from_str::<SynthesisConfig>(r#"{"n_synthetic_rows": 1, "bogus": 1}"#).is_err());
    }
}
