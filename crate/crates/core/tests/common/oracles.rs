#![allow(clippy::needless_range_loop)]

use microsynth_core::econ::{DesignMatrix, ModelKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::Rng;

pub fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Solves `a * x = b` exactly by Gauss-Jordan elimination. `a` is row-major.
pub fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let p = b.len();
    for col in 0..p {
        let pivot = (col..p).find(|&r| !a[r][col].is_zero()).expect("nonsingular");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = BigRational::one() / a[col][col].clone();
        for j in col..p {
            a[col][j] = &a[col][j] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..p {
                    let delta = &f * &a[col][j];
                    a[r][j] -= delta;
                }
                let delta = &f * &b[col];
                b[r] -= delta;
            }
        }
    }
    b
}

pub fn inverse_exact(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let p = a.len();
    let cols: Vec<Vec<BigRational>> = (0..p)
        .map(|j| {
            let e = (0..p)
                .map(|i| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect();
            solve_exact(a.to_vec(), e)
        })
        .collect();
    (0..p).map(|i| (0..p).map(|j| cols[j][i].clone()).collect()).collect()
}

pub fn design(kind: ModelKind, x: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
    let mut names = vec!["intercept".to_string()];
    names.extend((1..x.len()).map(|j| format!("x{j}")));
    DesignMatrix {
        model: "oracle".into(),
        kind,
        response: "y".into(),
        names,
        x,
        y,
        n_filtered_out: 0,
        n_dropped_invalid: 0,
        dummy_notes: Vec::new(),
    }
}

/// Random design with an intercept column and values on a 1/8 grid, so
/// every entry is exact in binary.
pub fn grid_design(r: &mut StdRng, n: usize, p: usize) -> Vec<Vec<f64>> {
    let mut x = vec![vec![1.0; n]];
    for _ in 1..p {
        x.push((0..n).map(|_| r.gen_range(-40..=40) as f64 / 8.0).collect());
    }
    x
}

pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
    let p = x.len();
    let xq: Vec<Vec<BigRational>> = x.iter().map(|c| c.iter().map(|&v| q(v)).collect()).collect();
    let yq: Vec<BigRational> = y.iter().map(|&v| q(v)).collect();
    let dot = |a: &[BigRational], b: &[BigRational]| {
        a.iter().zip(b).fold(BigRational::zero(), |acc, (u, v)| acc + u * v)
    };
    let xtx = (0..p).map(|i| (0..p).map(|j| dot(&xq[i], &xq[j])).collect()).collect();
    let xty = (0..p).map(|i| dot(&xq[i], &yq)).collect();
    (xtx, xty)
}

/// Newton's method for the logit MLE. Each step solves the Newton system
/// exactly in rationals, so only the f64 gradient and information matrix
/// limit the precision. Returns the estimate and its standard errors, or
/// `None` when the data are (nearly) separated.
pub fn newton_oracle(x: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let p = x.len();
    let n = y.len();
    let mut beta = vec![0.0; p];
    let info = |beta: &[f64]| {
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        for i in 0..n {
            let eta: f64 = (0..p).map(|j| beta[j] * x[j][i]).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = mu * (1.0 - mu);
            for a in 0..p {
                g[a] += x[a][i] * (y[i] - mu);
                for b in 0..p {
                    h[a][b] += w * x[a][i] * x[b][i];
                }
            }
        }
        (g, h)
    };
    for _ in 0..200 {
        let (g, h) = info(&beta);
        let hq: Vec<Vec<BigRational>> = h.iter().map(|row| row.iter().map(|&v| q(v)).collect()).collect();
        let step = solve_exact(hq, g.iter().map(|&v| q(v)).collect());
        let step: Vec<f64> = step.iter().map(to_f64).collect();
        for j in 0..p {
            beta[j] += step[j];
        }
        if beta.iter().any(|b| b.abs() > 15.0) {
            return None;
        }
        if step.iter().all(|s| s.abs() < 1e-14 * (1.0 + beta.iter().map(|b| b.abs()).fold(0.0, f64::max))) {
            let (_, h) = info(&beta);
            let hq: Vec<Vec<BigRational>> = h.iter().map(|row| row.iter().map(|&v| q(v)).collect()).collect();
            let inv = inverse_exact(&hq);
            let se = (0..p).map(|j| to_f64(&inv[j][j]).sqrt()).collect();
            return Some((beta, se));
        }
    }
    None
}

/// Exact OLS coefficients and classical standard errors.
pub fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, p) = (y.len(), x.len());
    let (xtx, xty) = normal_equations(x, y);
    let beta = solve_exact(xtx.clone(), xty);
    let mut rss = BigRational::zero();
    for i in 0..n {
        let fit = (0..p).fold(BigRational::zero(), |acc, j| acc + &beta[j] * q(x[j][i]));
        let e = q(y[i]) - fit;
        rss += &e * &e;
    }
    let sigma2 = rss / BigRational::from_integer(BigInt::from(n - p));
    let inv = inverse_exact(&xtx);
    let se = (0..p).map(|j| to_f64(&(&sigma2 * &inv[j][j])).sqrt()).collect();
    (beta.iter().map(to_f64).collect(), se)
}
