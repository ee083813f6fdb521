use rayon::prelude::*;

use super::design::DesignMatrix;
use super::{CovarianceType, EconError, RegressionResult, Result};
use super::spec::ModelKind;

/// Relative residual norm below which a column counts as a linear
/// combination of the columns already factored.
const RANK_TOL: f64 = 1e-9;

/// Householder QR with column pivoting of an n×p column-major matrix.
pub(crate) struct PivotedQr {
    /// Upper-triangular factor, `r[i][j]` for `i <= j`, in pivoted column order.
    pub r: Vec<Vec<f64>>,
    /// `perm[k]` is the original index of pivoted column `k`.
    pub perm: Vec<usize>,
    pub rank: usize,
    /// Householder vectors and their scale factors.
    reflectors: Vec<(Vec<f64>, f64)>,
}

impl PivotedQr {
    pub fn new(x: &[Vec<f64>]) -> PivotedQr {
        let p = x.len();
        let n = x.first().map_or(0, Vec::len);
        let mut a: Vec<Vec<f64>> = x.to_vec();
        let orig: Vec<f64> = a.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut reflectors = Vec::with_capacity(p);
        let mut rank = p.min(n);

        for k in 0..p.min(n) {
            let remaining: Vec<f64> = a[k..]
                .par_iter()
                .map(|c| c[k..].iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect();
            let best = (0..remaining.len())
                .filter(|&j| remaining[j] > RANK_TOL * orig[perm[k + j]])
                .max_by(|&i, &j| remaining[i].total_cmp(&remaining[j]).then(j.cmp(&i)));
            let Some(j) = best else {
                rank = k;
                break;
            };
            a.swap(k, k + j);
            perm.swap(k, k + j);

            let norm = remaining[j];
            let x0 = a[k][k];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let mut v: Vec<f64> = a[k][k..].to_vec();
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|t| t * t).sum();
            let beta = if vv > 0.0 { 2.0 / vv } else { 0.0 };
            a[k][k] = alpha;
            a[k][k + 1..].iter_mut().for_each(|t| *t = 0.0);
            a[k + 1..].par_iter_mut().for_each(|col| apply(&v, beta, &mut col[k..]));
            reflectors.push((v, beta));
        }

        let r = a.iter().map(|c| c[..p.min(n)].to_vec()).collect::<Vec<_>>();
        let r = (0..p.min(n)).map(|i| (0..p).map(|j| r[j][i]).collect()).collect();
        PivotedQr {
            r,
            perm,
            rank,
            reflectors,
        }
    }

    /// `Qᵀ y`.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            apply(v, *beta, &mut out[k..]);
        }
        out
    }

    /// Inverse of the leading `rank × rank` block of R.
    #[allow(clippy::needless_range_loop)]
    pub fn r_inverse(&self) -> Vec<Vec<f64>> {
        let m = self.rank;
        let mut inv = vec![vec![0.0; m]; m];
        for j in 0..m {
            inv[j][j] = 1.0 / self.r[j][j];
            for i in (0..j).rev() {
                let s: f64 = (i + 1..=j).map(|k| self.r[i][k] * inv[k][j]).sum();
                inv[i][j] = -s / self.r[i][i];
            }
        }
        inv
    }
}

fn apply(v: &[f64], beta: f64, x: &mut [f64]) {
    let s: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let f = beta * s;
    x.iter_mut().zip(v).for_each(|(t, a)| *t -= f * a);
}

/// `(XᵀX)⁻¹` from a full-rank factorization, in original column order.
pub(crate) fn gram_inverse(qr: &PivotedQr) -> Vec<Vec<f64>> {
    let p = qr.rank;
    let rinv = qr.r_inverse();
    let mut out = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let s: f64 = (b..p).map(|k| rinv[a][k] * rinv[b][k]).sum();
            out[qr.perm[a]][qr.perm[b]] = s;
            out[qr.perm[b]][qr.perm[a]] = s;
        }
    }
    out
}

/// Solves least squares by pivoted QR, refusing rank-deficient designs.
pub(crate) fn least_squares(x: &[Vec<f64>], y: &[f64], names: &[String]) -> Result<(Vec<f64>, PivotedQr)> {
    let p = x.len();
    let qr = PivotedQr::new(x);
    if qr.rank < p {
        return Err(EconError::RankDeficient {
            columns: qr.perm[qr.rank..].iter().map(|&j| names[j].clone()).collect(),
        });
    }
    let qty = qr.qt_mul(y);
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| qr.r[i][k] * z[k]).sum();
        z[i] = (qty[i] - s) / qr.r[i][i];
    }
    let mut beta = vec![0.0; p];
    for (k, &j) in qr.perm.iter().enumerate() {
        beta[j] = z[k];
    }
    Ok((beta, qr))
}

/// Ordinary least squares. Classical errors from σ̂²(XᵀX)⁻¹ with
/// σ̂² = RSS/(n−p), or HC1 sandwich errors when `robust` is set.
pub fn fit_ols(d: &DesignMatrix, robust: bool) -> Result<RegressionResult> {
    let n = d.n_rows();
    let p = d.n_params();
    if n <= p {
        return Err(EconError::TooFewRows { n, p });
    }
    let (beta, qr) = least_squares(&d.x, &d.y, &d.names)?;
    let resid: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| d.y[i] - (0..p).map(|j| d.x[j][i] * beta[j]).sum::<f64>())
        .collect();
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let sigma2 = rss / (n - p) as f64;
    let xtx_inv = gram_inverse(&qr);

    let cov: Vec<Vec<f64>> = if robust {
        let meat: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|a| {
                (0..p)
                    .map(|b| (0..n).map(|i| d.x[a][i] * d.x[b][i] * resid[i] * resid[i]).sum())
                    .collect()
            })
            .collect();
        let scale = n as f64 / (n - p) as f64;
        let left = mat_mul(&xtx_inv, &meat);
        mat_mul(&left, &xtx_inv)
            .into_iter()
            .map(|row| row.into_iter().map(|v| v * scale).collect())
            .collect()
    } else {
        xtx_inv
            .iter()
            .map(|row| row.iter().map(|v| v * sigma2).collect())
            .collect()
    };
    let se: Vec<f64> = (0..p).map(|j| cov[j][j].max(0.0).sqrt()).collect();

    Ok(RegressionResult {
        covariance: if robust { CovarianceType::Hc1 } else { CovarianceType::Classical },
        sigma2: Some(sigma2),
        ..RegressionResult::new(&d.model, ModelKind::Ols, d.names.clone(), beta, se, n)
    })
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..p).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
        .collect()
}
