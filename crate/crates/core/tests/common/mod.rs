#![allow(dead_code)]

pub mod oracles;

use std::collections::BTreeMap;

use microsynth_core::table::{ColumnData, ColumnSchema, Table};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Column recipe shared by an original/synthetic pair.
#[derive(Debug, Clone)]
pub enum ColumnGen {
    Categorical { labels: Vec<String> },
    /// Integers in `0..levels`, scaled, so ties are common.
    Numeric { levels: u32, scale: f64 },
}

pub fn random_layout(r: &mut StdRng, max_cols: usize) -> Vec<ColumnGen> {
    let d = r.gen_range(1..=max_cols);
    (0..d)
        .map(|_| {
            if r.gen_bool(0.5) {
                let n = r.gen_range(1..=6);
                ColumnGen::Categorical {
                    labels: (0..n).map(|i| format!("c{i}")).collect(),
                }
            } else {
                ColumnGen::Numeric {
                    levels: r.gen_range(1..=60),
                    scale: r.gen_range(0.1..10.0),
                }
            }
        })
        .collect()
}

/// A table following `layout`. `skew` tilts categorical draws toward the first labels.
pub fn random_table(r: &mut StdRng, layout: &[ColumnGen], n: usize, skew: f64) -> Table {
    let mut schema = Vec::new();
    let mut cols = Vec::new();
    for (i, g) in layout.iter().enumerate() {
        let name = format!("f{i}");
        match g {
            ColumnGen::Categorical { labels } => {
                schema.push(ColumnSchema::categorical(name, labels.clone()));
                let k = labels.len() as u32;
                cols.push(ColumnData::Categorical(
                    (0..n)
                        .map(|_| {
                            let u: f64 = r.gen::<f64>().powf(1.0 + skew);
                            ((u * k as f64) as u32).min(k - 1)
                        })
                        .collect(),
                ));
            }
            ColumnGen::Numeric { levels, scale } => {
                schema.push(ColumnSchema::numeric(name));
                cols.push(ColumnData::Numeric(
                    (0..n)
                        .map(|_| {
                            let v = r.gen_range(0..*levels) as f64 * scale;
                            v * (1.0 + skew * r.gen::<f64>())
                        })
                        .collect(),
                ));
            }
        }
    }
    Table::new(schema, cols).unwrap()
}

/// Bin key of one cell, computed without the library's binning code.
fn oracle_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let mut edges: Vec<f64> = Vec::new();
    for j in 1..n_bins {
        let e = v[std::cmp::min(j * n / n_bins, n - 1)];
        if edges.last() != Some(&e) {
            edges.push(e);
        }
    }
    edges
}

fn cell_key(t: &Table, col: usize, row: usize, edges: &[f64]) -> String {
    match t.column(col) {
        ColumnData::Categorical(c) => format!("cat:{}", t.column_schema(col).categories[c[row] as usize]),
        ColumnData::Numeric(v) => {
            let x = v[row];
            if x.is_nan() {
                "nan".to_string()
            } else {
                format!("bin:{}", edges.iter().filter(|&&e| e <= x).count())
            }
        }
    }
}

/// Joint-histogram TVD over the given feature subset, as a plain float sum.
pub fn oracle_tvd(a: &Table, b: &Table, subset: &[usize], n_bins: usize) -> f64 {
    let edges: Vec<Vec<f64>> = (0..a.n_cols())
        .map(|c| match a.column(c) {
            ColumnData::Numeric(v) => oracle_edges(v, n_bins),
            ColumnData::Categorical(_) => Vec::new(),
        })
        .collect();
    let mut hist: BTreeMap<Vec<String>, (f64, f64)> = BTreeMap::new();
    for r in 0..a.n_rows() {
        let key = subset.iter().map(|&c| cell_key(a, c, r, &edges[c])).collect();
        hist.entry(key).or_default().0 += 1.0;
    }
    for r in 0..b.n_rows() {
        let key = subset.iter().map(|&c| cell_key(b, c, r, &edges[c])).collect();
        hist.entry(key).or_default().1 += 1.0;
    }
    let (na, nb) = (a.n_rows() as f64, b.n_rows() as f64);
    0.5 * hist.values().map(|&(x, y)| (x / na - y / nb).abs()).sum::<f64>()
}

pub fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, k, &mut Vec::new(), &mut out);
    out
}

/// Mean of `1000 * (1 - TVD)` over every k-subset.
pub fn oracle_score(a: &Table, b: &Table, k: usize, n_bins: usize) -> f64 {
    let all = subsets(a.n_cols(), k);
    all.iter().map(|s| 1000.0 * (1.0 - oracle_tvd(a, b, s, n_bins))).sum::<f64>() / all.len() as f64
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn pick(r: &mut StdRng, probs: &[f64]) -> u32 {
    let u: f64 = r.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    probs.len() as u32 - 1
}

/// Ten-variable Bayesian network resembling a business survey.
///
/// region -> sector -> size; size, sector -> employees; employees -> payroll,
/// where payroll is an exact function of employees (a functional tie).
/// age, owners, immigrant, family and ln_sales hang off the earlier nodes.
pub fn bayes_net(seed: u64, n: usize) -> Table {
    let mut r = rng(seed);
    let regions = ["north", "south", "east", "west"];
    let sectors = ["manuf", "retail", "services"];
    let sizes = ["small", "medium", "large"];
    let mut region = Vec::with_capacity(n);
    let mut sector = Vec::with_capacity(n);
    let mut size = Vec::with_capacity(n);
    let mut employees = Vec::with_capacity(n);
    let mut payroll = Vec::with_capacity(n);
    let mut age = Vec::with_capacity(n);
    let mut owners = Vec::with_capacity(n);
    let mut immigrant = Vec::with_capacity(n);
    let mut family = Vec::with_capacity(n);
    let mut ln_sales = Vec::with_capacity(n);
    for _ in 0..n {
        let g = pick(&mut r, &[0.35, 0.25, 0.25, 0.15]);
        let s = match g {
            0 => pick(&mut r, &[0.5, 0.3, 0.2]),
            1 => pick(&mut r, &[0.2, 0.5, 0.3]),
            _ => pick(&mut r, &[0.25, 0.25, 0.5]),
        };
        let z = match s {
            0 => pick(&mut r, &[0.4, 0.4, 0.2]),
            1 => pick(&mut r, &[0.7, 0.25, 0.05]),
            _ => pick(&mut r, &[0.6, 0.3, 0.1]),
        };
        let base: f64 = [1.0, 10.0, 50.0][z as usize];
        let emp = (base + r.gen_range(0.0..base * 2.0)).floor();
        let a = (r.gen_range(20.0..70.0f64)).floor();
        let imm = r.gen_bool(logistic(-2.0 + 0.6 * (g == 0) as u8 as f64 + 0.4 * (s == 1) as u8 as f64));
        let own = 1.0 + pick(&mut r, if imm { &[0.4, 0.4, 0.2] } else { &[0.6, 0.3, 0.1] }) as f64;
        let fam = r.gen_bool(logistic(-1.0 + 0.5 * (own - 1.0) + 0.01 * (a - 45.0)));
        let noise: f64 = (0..4).map(|_| r.gen::<f64>()).sum::<f64>() - 2.0;
        let ls = 3.0 + 0.9 * emp.ln_1p() + 0.4 * imm as u8 as f64 + 0.2 * (s == 0) as u8 as f64 - 0.005 * a + 0.8 * noise;
        region.push(g);
        sector.push(s);
        size.push(z);
        employees.push(emp);
        payroll.push(emp * 31.5 + 12.0);
        age.push(a);
        owners.push(own);
        immigrant.push(imm as u8 as f64);
        family.push(fam as u8 as f64);
        ln_sales.push((ls * 1000.0).round() / 1000.0);
    }
    Table::new(
        vec![
            ColumnSchema::categorical("region", regions),
            ColumnSchema::categorical("sector", sectors),
            ColumnSchema::categorical("size", sizes),
            ColumnSchema::numeric("employees"),
            ColumnSchema::numeric("payroll"),
            ColumnSchema::numeric("age"),
            ColumnSchema::numeric("owners"),
            ColumnSchema::numeric("immigrant"),
            ColumnSchema::numeric("family"),
            ColumnSchema::numeric("ln_sales"),
        ],
        vec![
            ColumnData::Categorical(region),
            ColumnData::Categorical(sector),
            ColumnData::Categorical(size),
            ColumnData::Numeric(employees),
            ColumnData::Numeric(payroll),
            ColumnData::Numeric(age),
            ColumnData::Numeric(owners),
            ColumnData::Numeric(immigrant),
            ColumnData::Numeric(family),
            ColumnData::Numeric(ln_sales),
        ],
    )
    .unwrap()
}
