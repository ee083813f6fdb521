use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::design::DesignMatrix;
use super::spec::ModelKind;
use super::{Convergence, EconError, RegressionResult, Result};

/// Any coefficient beyond this magnitude is taken as evidence that the MLE
/// does not exist.
pub const SEPARATION_BOUND: f64 = 30.0;

/// Converged Newton steps must also be this small, so a likelihood that keeps
/// improving along a ray is not mistaken for a maximum.
const STEP_TOL: f64 = 1e-6;

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^η) without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

struct State {
    loglik: f64,
    grad: DVector<f64>,
    info: DMatrix<f64>,
}

/// Rows per partial sum. Fixed, so the summation order and hence the result
/// do not depend on the thread count.
const CHUNK_ROWS: usize = 4096;

fn evaluate(d: &DesignMatrix, beta: &[f64]) -> State {
    let n = d.n_rows();
    let p = d.n_params();
    let partials: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..n.div_ceil(CHUNK_ROWS))
        .into_par_iter()
        .map(|c| {
            let (mut ll, mut g, mut h) = (0.0, vec![0.0; p], vec![0.0; p * p]);
            for i in c * CHUNK_ROWS..((c + 1) * CHUNK_ROWS).min(n) {
                let eta: f64 = (0..p).map(|j| d.x[j][i] * beta[j]).sum();
                let mu = sigmoid(eta);
                let w = mu * (1.0 - mu);
                let y = d.y[i];
                ll += y * eta - softplus(eta);
                for a in 0..p {
                    let xa = d.x[a][i];
                    g[a] += xa * (y - mu);
                    for b in a..p {
                        h[a * p + b] += w * xa * d.x[b][i];
                    }
                }
            }
            (ll, g, h)
        })
        .collect();
    let (mut loglik, mut grad, mut info) = (0.0, vec![0.0; p], vec![0.0; p * p]);
    for (ll, g, h) in partials {
        loglik += ll;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        info.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    let mut info = DMatrix::from_row_slice(p, p, &info);
    for a in 0..p {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    State {
        loglik,
        grad: DVector::from_vec(grad),
        info,
    }
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Logistic regression by Newton–Raphson (IRLS). Converges when
/// `max |Xᵀ(y − p̂)| < tol·n` and the Newton step is negligible.
pub fn fit_logistic(d: &DesignMatrix, tol: f64, max_iter: usize) -> Result<RegressionResult> {
    let n = d.n_rows();
    let p = d.n_params();
    if n <= p {
        return Err(EconError::TooFewRows { n, p });
    }
    if let Some(v) = d.y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(EconError::NotBinary {
            column: d.response.clone(),
            value: *v,
        });
    }
    if d.y.iter().all(|&v| v == d.y[0]) {
        return Err(EconError::ConstantResponse(d.response.clone()));
    }
    // Rank problems are a design fault, not separation.
    super::ols::least_squares(&d.x, &d.y, &d.names)?;

    let mut beta = vec![0.0; p];
    let mut state = evaluate(d, &beta);
    let separation = |beta: &[f64], iterations| {
        let j = (0..p)
            .max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()))
            .unwrap_or(0);
        EconError::Separation {
            parameter: d.names[j].clone(),
            iterations,
        }
    };

    for iter in 0..=max_iter {
        let Some(chol) = state.info.clone().cholesky() else {
            return Err(separation(&beta, iter));
        };
        let step = chol.solve(&state.grad);
        if max_abs(&state.grad) < tol * n as f64 && max_abs(&step) < STEP_TOL {
            let cov = chol.inverse();
            let se = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
            return Ok(RegressionResult {
                convergence: Some(Convergence {
                    iterations: iter,
                    max_abs_gradient: max_abs(&state.grad),
                }),
                log_likelihood: Some(state.loglik),
                ..RegressionResult::new(&d.model, ModelKind::Logit, d.names.clone(), beta, se, n)
            });
        }
        if iter == max_iter {
            break;
        }

        // Halve the step until the likelihood does not drop.
        let mut scale = 1.0;
        let (next_beta, next_state) = loop {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let st = evaluate(d, &cand);
            if st.loglik >= state.loglik - 1e-12 * state.loglik.abs() || scale < 1e-3 {
                break (cand, st);
            }
            scale *= 0.5;
        };
        beta = next_beta;
        state = next_state;
        if beta.iter().any(|b| b.abs() > SEPARATION_BOUND || !b.is_finite()) {
            return Err(separation(&beta, iter + 1));
        }
    }
    Err(EconError::NoConvergence {
        iterations: max_iter,
        max_abs_gradient: max_abs(&state.grad),
    })
}
