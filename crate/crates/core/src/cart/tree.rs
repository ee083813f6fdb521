use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Result, SynthError, TreeParams};
use crate::rng::{cumulative, draw_cumulative, StreamRng};
use crate::table::{Cell, ColumnData, Table};

/// How a split routes a row: numeric `x <= threshold` goes left, categorical
/// `x in left_set` goes left. Anything else (including categories never seen
/// while fitting) goes right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitForm {
    Threshold(f64),
    LeftSet(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub predictor: String,
    /// Column index in the training table.
    pub column: usize,
    pub form: SplitForm,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, cell: Cell) -> bool {
        match (&self.form, cell) {
            (SplitForm::Threshold(t), Cell::Num(x)) => x <= *t,
            (SplitForm::LeftSet(set), Cell::Cat(c)) => set.binary_search(&c).is_ok(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split { rule: SplitRule, left: usize, right: usize },
    Leaf { leaf: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DonorValues {
    Categorical(Vec<u32>),
    Numeric(Vec<f64>),
}

/// Observed target values that fell into one leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// Training row indices, ascending.
    pub donors: Vec<usize>,
    pub values: DonorValues,
    /// Running sum of donor weights, present for weighted fits.
    pub cumulative_weights: Option<Vec<f64>>,
}

impl Leaf {
    pub fn len(&self) -> usize {
        self.donors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.donors.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LeafId(pub usize);

/// A fitted CART model whose leaves hold donor pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub target: String,
    pub target_column: usize,
    pub predictors: Vec<String>,
    pub params: TreeParams,
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf(&self, id: LeafId) -> &Leaf {
        &self.leaves[id.0]
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Smallest donor pool. Never below `params.min_leaf` for a fitted tree.
    pub fn min_donor_pool(&self) -> usize {
        self.leaves.iter().map(Leaf::len).min().unwrap_or(0)
    }

    /// Descends using `cell(column)` for each split's predictor.
    #[inline]
    pub fn route_with(&self, cell: impl Fn(usize) -> Cell) -> LeafId {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { leaf } => return LeafId(*leaf),
                Node::Split { rule, left, right } => {
                    i = if rule.goes_left(cell(rule.column)) { *left } else { *right };
                }
            }
        }
    }

    /// Routes a partial row indexed by training-table column. Every predictor
    /// the path touches must be present.
    pub fn route_to_leaf(&self, row: &[Option<Cell>]) -> Result<LeafId> {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { leaf } => return Ok(LeafId(*leaf)),
                Node::Split { rule, left, right } => {
                    let cell = row
                        .get(rule.column)
                        .copied()
                        .flatten()
                        .ok_or_else(|| SynthError::MissingPredictor(rule.predictor.clone()))?;
                    i = if rule.goes_left(cell) { *left } else { *right };
                }
            }
        }
    }

    /// One draw from the leaf's donor pool: uniform, or weight-proportional
    /// for weighted fits. Values are returned verbatim.
    #[inline]
    pub fn sample_from_leaf(&self, leaf: LeafId, rng: &mut StreamRng) -> Cell {
        let leaf = &self.leaves[leaf.0];
        let i = match &leaf.cumulative_weights {
            Some(cum) => draw_cumulative(rng, cum),
            None => rng.index(leaf.donors.len()),
        };
        match &leaf.values {
            DonorValues::Categorical(v) => Cell::Cat(v[i]),
            DonorValues::Numeric(v) => Cell::Num(v[i]),
        }
    }
}

enum Target<'a> {
    Classes { codes: &'a [u32], n_classes: usize },
    Values(&'a [f64]),
}

struct Fitter<'a> {
    target: Target<'a>,
    weights: Option<&'a [f64]>,
    predictors: Vec<(usize, &'a ColumnData, usize)>,
    params: &'a TreeParams,
    root_weight: f64,
}

#[derive(Debug, Clone)]
struct Candidate {
    gain: f64,
    left_rows: usize,
    predictor_rank: usize,
    form: SplitForm,
    column: usize,
}

impl Candidate {
    /// True if `self` should be preferred over `other`.
    fn beats(&self, other: &Candidate) -> bool {
        if self.gain != other.gain {
            return self.gain > other.gain;
        }
        if self.left_rows != other.left_rows {
            return self.left_rows < other.left_rows;
        }
        self.predictor_rank < other.predictor_rank
    }
}

/// Running impurity statistics. `cost` is total weight times impurity.
#[derive(Clone)]
enum Stats {
    Classes { counts: Vec<f64>, sum_sq: f64, w: f64 },
    Values { sum: f64, sum_sq: f64, w: f64, shift: f64 },
}

impl Stats {
    fn empty_like(&self) -> Stats {
        match self {
            Stats::Classes { counts, .. } => Stats::Classes {
                counts: vec![0.0; counts.len()],
                sum_sq: 0.0,
                w: 0.0,
            },
            Stats::Values { shift, .. } => Stats::Values {
                sum: 0.0,
                sum_sq: 0.0,
                w: 0.0,
                shift: *shift,
            },
        }
    }

    #[inline]
    fn add(&mut self, target: &Target, row: usize, wt: f64) {
        match (self, target) {
            (Stats::Classes { counts, sum_sq, w }, Target::Classes { codes, .. }) => {
                let k = codes[row] as usize;
                let c = counts[k];
                *sum_sq += (c + wt) * (c + wt) - c * c;
                counts[k] = c + wt;
                *w += wt;
            }
            (Stats::Values { sum, sum_sq, w, shift }, Target::Values(y)) => {
                let d = y[row] - *shift;
                *sum += wt * d;
                *sum_sq += wt * d * d;
                *w += wt;
            }
            _ => unreachable!(),
        }
    }

    #[inline]
    fn remove(&mut self, target: &Target, row: usize, wt: f64) {
        match (self, target) {
            (Stats::Classes { counts, sum_sq, w }, Target::Classes { codes, .. }) => {
                let k = codes[row] as usize;
                let c = counts[k];
                *sum_sq += (c - wt) * (c - wt) - c * c;
                counts[k] = c - wt;
                *w -= wt;
            }
            (Stats::Values { sum, sum_sq, w, shift }, Target::Values(y)) => {
                let d = y[row] - *shift;
                *sum -= wt * d;
                *sum_sq -= wt * d * d;
                *w -= wt;
            }
            _ => unreachable!(),
        }
    }

    /// Weight times impurity (Gini or variance).
    #[inline]
    fn cost(&self) -> f64 {
        match self {
            Stats::Classes { sum_sq, w, .. } => {
                if *w <= 0.0 {
                    0.0
                } else {
                    (*w - sum_sq / w).max(0.0)
                }
            }
            Stats::Values { sum, sum_sq, w, .. } => {
                if *w <= 0.0 {
                    0.0
                } else {
                    (sum_sq - sum * sum / w).max(0.0)
                }
            }
        }
    }

    fn merge(&mut self, other: &Stats) {
        match (self, other) {
            (
                Stats::Classes { counts, sum_sq, w },
                Stats::Classes {
                    counts: oc, w: ow, ..
                },
            ) => {
                for (c, o) in counts.iter_mut().zip(oc) {
                    *sum_sq += (*c + o) * (*c + o) - *c * *c;
                    *c += o;
                }
                *w += ow;
            }
            (
                Stats::Values { sum, sum_sq, w, .. },
                Stats::Values {
                    sum: os,
                    sum_sq: oss,
                    w: ow,
                    ..
                },
            ) => {
                *sum += os;
                *sum_sq += oss;
                *w += ow;
            }
            _ => unreachable!(),
        }
    }
}

impl<'a> Fitter<'a> {
    #[inline]
    fn w(&self, row: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[row])
    }

    fn node_stats(&self, rows: &[usize]) -> Stats {
        let mut s = match &self.target {
            Target::Classes { n_classes, .. } => Stats::Classes {
                counts: vec![0.0; *n_classes],
                sum_sq: 0.0,
                w: 0.0,
            },
            Target::Values(y) => {
                let shift = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len().max(1) as f64;
                Stats::Values {
                    sum: 0.0,
                    sum_sq: 0.0,
                    w: 0.0,
                    shift,
                }
            }
        };
        for &r in rows {
            s.add(&self.target, r, self.w(r));
        }
        s
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match &self.target {
            Target::Classes { codes, .. } => rows.iter().all(|&r| codes[r] == codes[rows[0]]),
            Target::Values(y) => rows.iter().all(|&r| y[r] == y[rows[0]]),
        }
    }

    fn best_split(&self, rows: &[usize], parent: &Stats) -> Option<Candidate> {
        let parent_cost = parent.cost();
        let found: Vec<Option<Candidate>> = self
            .predictors
            .par_iter()
            .map(|&(column, data, rank)| match data {
                ColumnData::Numeric(x) => self.numeric_split(rows, parent, parent_cost, x, column, rank),
                ColumnData::Categorical(x) => {
                    self.categorical_split(rows, parent, parent_cost, x, column, rank)
                }
            })
            .collect();
        let mut best: Option<Candidate> = None;
        for c in found.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
        best
    }

    fn numeric_split(
        &self,
        rows: &[usize],
        parent: &Stats,
        parent_cost: f64,
        x: &[f64],
        column: usize,
        rank: usize,
    ) -> Option<Candidate> {
        let min_leaf = self.params.min_leaf;
        let n = rows.len();
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));

        // Boundary after position i (left = sorted[..=i]) is valid when the
        // value changes there and both sides meet the leaf floor.
        let valid: Vec<usize> = (min_leaf.saturating_sub(1)..n.saturating_sub(min_leaf))
            .filter(|&i| x[sorted[i]].total_cmp(&x[sorted[i + 1]]).is_lt())
            .collect();
        if valid.is_empty() {
            return None;
        }
        let cap = self.params.max_numeric_split_candidates.max(1);
        let chosen: Vec<usize> = if valid.len() <= cap {
            valid
        } else {
            // Boundaries nearest to evenly spaced row-rank quantiles.
            let mut out = Vec::with_capacity(cap);
            for j in 1..=cap {
                let target_pos = j * n / (cap + 1);
                let k = valid.partition_point(|&v| v < target_pos).min(valid.len() - 1);
                if out.last() != Some(&valid[k]) {
                    out.push(valid[k]);
                }
            }
            out
        };

        let mut left = parent.empty_like();
        let mut right = parent.clone();
        let mut best: Option<(f64, usize)> = None;
        let mut next = 0;
        for (i, &r) in sorted.iter().enumerate() {
            if next >= chosen.len() {
                break;
            }
            let wt = self.w(r);
            left.add(&self.target, r, wt);
            right.remove(&self.target, r, wt);
            if i == chosen[next] {
                next += 1;
                let gain = parent_cost - left.cost() - right.cost();
                if best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, i));
                }
            }
        }
        let (gain, i) = best?;
        let lo = x[sorted[i]];
        let hi = x[sorted[i + 1]];
        let threshold = if hi.is_nan() {
            lo
        } else {
            let mid = lo + (hi - lo) / 2.0;
            if mid >= hi || mid < lo {
                lo
            } else {
                mid
            }
        };
        Some(Candidate {
            gain,
            left_rows: i + 1,
            predictor_rank: rank,
            form: SplitForm::Threshold(threshold),
            column,
        })
    }

    fn categorical_split(
        &self,
        rows: &[usize],
        parent: &Stats,
        parent_cost: f64,
        x: &[u32],
        column: usize,
        rank: usize,
    ) -> Option<Candidate> {
        let min_leaf = self.params.min_leaf;
        // Per-category statistics for categories present in the node.
        let mut per_cat: Vec<(u32, Stats, usize)> = Vec::new();
        let mut slot: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
        for &r in rows {
            let c = x[r];
            let idx = *slot.entry(c).or_insert_with(|| {
                per_cat.push((c, parent.empty_like(), 0));
                per_cat.len() - 1
            });
            per_cat[idx].1.add(&self.target, r, self.w(r));
            per_cat[idx].2 += 1;
        }
        if per_cat.len() < 2 {
            return None;
        }
        // Order key: mean target (numeric) or share of the node's majority class.
        let key = |s: &Stats| -> f64 {
            match (s, parent) {
                (Stats::Values { sum, w, .. }, _) => sum / w,
                (Stats::Classes { counts, w, .. }, Stats::Classes { counts: pc, .. }) => {
                    let majority = pc
                        .iter()
                        .enumerate()
                        .fold(0, |best, (k, &v)| if v > pc[best] { k } else { best });
                    counts[majority] / w
                }
                _ => unreachable!(),
            }
        };
        per_cat.sort_by(|a, b| key(&a.1).total_cmp(&key(&b.1)).then(a.0.cmp(&b.0)));

        let n = rows.len();
        let mut left = parent.empty_like();
        let mut left_n = 0usize;
        let mut best: Option<(f64, usize, usize)> = None;
        for k in 0..per_cat.len() - 1 {
            left.merge(&per_cat[k].1);
            left_n += per_cat[k].2;
            if left_n < min_leaf || n - left_n < min_leaf {
                continue;
            }
            let mut right = parent.empty_like();
            for c in &per_cat[k + 1..] {
                right.merge(&c.1);
            }
            let gain = parent_cost - left.cost() - right.cost();
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, k, left_n));
            }
        }
        let (gain, k, left_rows) = best?;
        let mut set: Vec<u32> = per_cat[..=k].iter().map(|c| c.0).collect();
        set.sort_unstable();
        Some(Candidate {
            gain,
            left_rows,
            predictor_rank: rank,
            form: SplitForm::LeftSet(set),
            column,
        })
    }

    fn make_leaf(&self, rows: &mut [usize]) -> Leaf {
        rows.sort_unstable();
        let values = match &self.target {
            Target::Classes { codes, .. } => DonorValues::Categorical(rows.iter().map(|&r| codes[r]).collect()),
            Target::Values(y) => DonorValues::Numeric(rows.iter().map(|&r| y[r]).collect()),
        };
        Leaf {
            donors: rows.to_vec(),
            values,
            cumulative_weights: self
                .weights
                .map(|w| cumulative(rows.iter().map(|&r| w[r]))),
        }
    }
}

/// Fits a CART tree for `target` on `predictors`.
///
/// Splits are chosen greedily to maximise the weighted impurity decrease
/// (Gini for categorical targets, variance for numeric ones). A node becomes
/// a leaf when it is pure, has fewer than `2 * min_leaf` rows, has reached
/// `max_depth`, or its best split does not beat `min_impurity_decrease`
/// (measured as a fraction of the root's total weight). Both children of
/// every split keep at least `min_leaf` rows. An empty predictor list gives a
/// single leaf holding every row.
pub fn fit_tree(
    t: &Table,
    target: &str,
    predictors: &[&str],
    params: &TreeParams,
    weighted: bool,
) -> Result<DecisionTree> {
    params.validate()?;
    let target_column = t.require_index(target)?;
    if t.n_rows() < params.min_leaf || t.n_rows() == 0 {
        return Err(SynthError::TooFewRows {
            column: target.to_string(),
            n_rows: t.n_rows(),
            min_leaf: params.min_leaf,
        });
    }
    let weights = if weighted {
        Some(t.weights().ok_or_else(|| {
            SynthError::Config("weighted fitting requested but the table has no weight column".into())
        })?)
    } else {
        None
    };
    let target_data = match t.column(target_column) {
        ColumnData::Categorical(codes) => Target::Classes {
            codes,
            n_classes: t.column_schema(target_column).categories.len(),
        },
        ColumnData::Numeric(y) => {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(SynthError::Config(format!(
                    "numeric target {target} contains missing or non-finite values"
                )));
            }
            Target::Values(y)
        }
    };
    let mut predictor_cols = Vec::with_capacity(predictors.len());
    for (rank, p) in predictors.iter().enumerate() {
        let idx = t.require_index(p)?;
        if idx == target_column {
            return Err(SynthError::Config(format!("{target} cannot predict itself")));
        }
        predictor_cols.push((idx, t.column(idx), rank));
    }

    let mut fitter = Fitter {
        target: target_data,
        weights,
        predictors: predictor_cols,
        params,
        root_weight: 0.0,
    };
    fitter.root_weight = match weights {
        Some(w) => w.iter().sum(),
        None => t.n_rows() as f64,
    };

    let mut nodes: Vec<Node> = vec![Node::Leaf { leaf: usize::MAX }];
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, (0..t.n_rows()).collect(), 0)];

    while let Some((node_id, mut rows, depth)) = stack.pop() {
        let split = if depth >= params.max_depth
            || rows.len() < 2 * params.min_leaf
            || fitter.predictors.is_empty()
            || fitter.is_pure(&rows)
        {
            None
        } else {
            let parent = fitter.node_stats(&rows);
            fitter.best_split(&rows, &parent).filter(|c| {
                let decrease = c.gain / fitter.root_weight;
                let noise = 1e-12 * parent.cost() / fitter.root_weight;
                c.gain > 0.0 && decrease > params.min_impurity_decrease + noise
            })
        };
        match split {
            None => {
                nodes[node_id] = Node::Leaf { leaf: leaves.len() };
                leaves.push(fitter.make_leaf(&mut rows));
            }
            Some(c) => {
                let rule = SplitRule {
                    predictor: t.column_schema(c.column).name.clone(),
                    column: c.column,
                    form: c.form,
                };
                let data = t.column(c.column);
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&r| rule.goes_left(data.get(r)));
                debug_assert!(left_rows.len() >= params.min_leaf && right_rows.len() >= params.min_leaf);
                let left = nodes.len();
                let right = left + 1;
                nodes.push(Node::Leaf { leaf: usize::MAX });
                nodes.push(Node::Leaf { leaf: usize::MAX });
                nodes[node_id] = Node::Split { rule, left, right };
                // Right first so the left subtree is expanded first.
                stack.push((right, right_rows, depth + 1));
                stack.push((left, left_rows, depth + 1));
            }
        }
    }

    Ok(DecisionTree {
        target: target.to_string(),
        target_column,
        predictors: predictors.iter().map(|s| s.to_string()).collect(),
        params: params.clone(),
        nodes,
        leaves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnSchema;

    fn xy(x: Vec<f64>, y: Vec<u32>) -> Table {
        Table::new(
            vec![ColumnSchema::numeric("x"), ColumnSchema::categorical("y", ["0", "1"])],
            vec![ColumnData::Numeric(x), ColumnData::Categorical(y)],
        )
        .unwrap()
    }

    fn params(min_leaf: usize) -> TreeParams {
        TreeParams {
            min_leaf,
            ..TreeParams::default()
        }
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let t = xy((1..=10).map(f64::from).collect(), vec![1; 10]);
        let tree = fit_tree(&t, "y", &["x"], &params(1), false).unwrap();
        assert_eq!(tree.n_leaves(), 1);
        assert_eq!(tree.leaves()[0].len(), 10);
    }

    #[test]
    fn step_function_splits_between_five_and_six() {
        let t = xy((1..=10).map(f64::from).collect(), (1..=10).map(|x| u32::from(x > 5)).collect());
        let tree = fit_tree(&t, "y", &["x"], &params(2), false).unwrap();
        match &tree.nodes()[0] {
            Node::Split { rule, .. } => match rule.form {
                SplitForm::Threshold(th) => assert!((5.0..6.0).contains(&th)),
                _ => panic!("expected numeric split"),
            },
            _ => panic!("expected a split at the root"),
        }
        assert_eq!(tree.n_leaves(), 2);
        for leaf in tree.leaves() {
            match &leaf.values {
                DonorValues::Categorical(v) => assert!(v.iter().all(|&c| c == v[0])),
                _ => panic!(),
            }
        }
        let leaf = tree.route_with(|_| Cell::Num(3.0));
        match &tree.leaf(leaf).values {
            DonorValues::Categorical(v) => assert!(v.iter().all(|&c| c == 0)),
            _ => panic!(),
        }
    }

    #[test]
    fn leaf_floor_forces_single_leaf() {
        let t = xy((1..=9).map(f64::from).collect(), (1..=9).map(|x| u32::from(x > 4)).collect());
        let tree = fit_tree(&t, "y", &["x"], &params(5), false).unwrap();
        assert_eq!(tree.n_leaves(), 1);
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let t = xy(vec![1.0, 2.0], vec![0, 1]);
        assert!(matches!(
            fit_tree(&t, "y", &["x"], &params(5), false),
            Err(SynthError::TooFewRows { .. })
        ));
    }

    #[test]
    fn empty_predictors_give_one_leaf() {
        let t = xy((1..=10).map(f64::from).collect(), (1..=10).map(|x| x % 2).collect());
        let tree = fit_tree(&t, "y", &[], &params(1), false).unwrap();
        assert_eq!(tree.n_leaves(), 1);
    }

    #[test]
    fn max_depth_is_respected() {
        let t = xy((1..=64).map(f64::from).collect(), (1..=64).map(|x| x % 2).collect());
        let p = TreeParams {
            min_leaf: 1,
            max_depth: 3,
            ..TreeParams::default()
        };
        let tree = fit_tree(&t, "y", &["x"], &p, false).unwrap();
        assert!(tree.depth() <= 3);
    }

    #[test]
    fn categorical_split_and_unseen_category() {
        let t = Table::new(
            vec![
                ColumnSchema::categorical("x", ["A", "B", "C", "D"]),
                ColumnSchema::numeric("y"),
            ],
            vec![
                ColumnData::Categorical(vec![0, 0, 1, 1, 3, 3]),
                ColumnData::Numeric(vec![1.0, 1.0, 1.0, 1.0, 9.0, 9.0]),
            ],
        )
        .unwrap();
        let tree = fit_tree(&t, "y", &["x"], &params(1), false).unwrap();
        match &tree.nodes()[0] {
            Node::Split { rule, right, .. } => {
                assert_eq!(rule.form, SplitForm::LeftSet(vec![0, 1]));
                // C never appeared while fitting: it routes right.
                let leaf = tree.route_to_leaf(&[Some(Cell::Cat(2)), None]).unwrap();
                assert_eq!(tree.nodes()[*right], Node::Leaf { leaf: leaf.0 });
            }
            _ => panic!(),
        }
        assert!(matches!(
            tree.route_to_leaf(&[None, None]),
            Err(SynthError::MissingPredictor(_))
        ));
    }

    #[test]
    fn leaf_sampling() {
        let t = Table::new(
            vec![ColumnSchema::categorical("y", ["A", "B"])],
            vec![ColumnData::Categorical(vec![0, 0, 1])],
        )
        .unwrap();
        let tree = fit_tree(&t, "y", &[], &params(1), false).unwrap();
        let mut rng = StreamRng::new(11, &[]);
        let n = 60_000;
        let a = (0..n)
            .filter(|_| tree.sample_from_leaf(LeafId(0), &mut rng) == Cell::Cat(0))
            .count();
        assert!((a as f64 / n as f64 - 2.0 / 3.0).abs() < 0.01);

        let single = Table::new(vec![ColumnSchema::numeric("y")], vec![ColumnData::Numeric(vec![7.0])]).unwrap();
        let tree = fit_tree(&single, "y", &[], &params(1), false).unwrap();
        for _ in 0..100 {
            assert_eq!(tree.sample_from_leaf(LeafId(0), &mut rng), Cell::Num(7.0));
        }
    }

    #[test]
    fn weighted_leaf_sampling() {
        let t = Table::new(
            vec![ColumnSchema::categorical("y", ["A", "B"]), ColumnSchema::numeric("w")],
            vec![ColumnData::Categorical(vec![0, 1]), ColumnData::Numeric(vec![3.0, 1.0])],
        )
        .unwrap()
        .with_weight_column("w")
        .unwrap();
        let tree = fit_tree(&t, "y", &[], &params(1), true).unwrap();
        let mut rng = StreamRng::new(2024, &[]);
        let n = 100_000;
        let a = (0..n)
            .filter(|_| tree.sample_from_leaf(LeafId(0), &mut rng) == Cell::Cat(0))
            .count();
        assert!((a as f64 / n as f64 - 0.75).abs() < 0.01);
    }
}
