#![allow(clippy::needless_range_loop)]

mod common;

use common::oracles::{design, grid_design, inverse_exact, newton_oracle, ols_oracle, q};
use common::rng;
use microsynth_core::econ::{fit_logistic, fit_ols, ModelKind, LOGIT_MAX_ITER, LOGIT_TOL};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

#[test]
fn ols_matches_exact_normal_equations() {
    let mut r = rng(2024);
    for case in 0..100 {
        let p = r.gen_range(2..=5);
        let n = r.gen_range(p + 3..=40);
        let x = grid_design(&mut r, n, p);
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-200..=200) as f64 / 4.0).collect();
        let (beta, se) = ols_oracle(&x, &y);
        let fit = fit_ols(&design(ModelKind::Ols, x, y), false).unwrap();
        for j in 0..p {
            assert!(
                (fit.coefficients[j] - beta[j]).abs() <= 1e-8 * beta[j].abs().max(1.0),
                "case {case} coef {j}: {} vs {}",
                fit.coefficients[j],
                beta[j]
            );
            assert!(
                (fit.std_errors[j] - se[j]).abs() <= 1e-8 * se[j].max(1.0),
                "case {case} se {j}: {} vs {}",
                fit.std_errors[j],
                se[j]
            );
        }
    }
}

#[test]
fn ols_residuals_are_orthogonal_to_the_design() {
    let mut r = rng(31);
    let n = 500;
    let x = grid_design(&mut r, n, 4);
    let y: Vec<f64> = (0..n).map(|i| x[1][i] - 0.5 * x[2][i] + r.gen_range(-1.0..1.0)).collect();
    let fit = fit_ols(&design(ModelKind::Ols, x.clone(), y.clone()), false).unwrap();
    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..4).map(|j| fit.coefficients[j] * x[j][i]).sum::<f64>())
        .collect();
    for col in &x {
        let dot: f64 = col.iter().zip(&resid).map(|(a, e)| a * e).sum();
        assert!(dot.abs() < 1e-6 * n as f64, "{dot}");
    }
}

#[test]
fn logit_matches_high_precision_newton() {
    let mut r = rng(77);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 100 {
        attempts += 1;
        assert!(attempts < 400, "too many degenerate designs");
        let p = r.gen_range(2..=4);
        let n = r.gen_range(40..=150);
        let x = grid_design(&mut r, n, p);
        let truth: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta: f64 = (0..p).map(|j| truth[j] * x[j][i] / 3.0).sum();
                r.gen_bool(1.0 / (1.0 + (-eta).exp())) as u8 as f64
            })
            .collect();
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        if ones < 5 || n - ones < 5 {
            continue;
        }
        let Some((beta, se)) = newton_oracle(&x, &y) else {
            continue;
        };
        let fit = fit_logistic(&design(ModelKind::Logit, x, y), LOGIT_TOL, LOGIT_MAX_ITER).unwrap();
        for j in 0..p {
            assert!(
                (fit.coefficients[j] - beta[j]).abs() < 1e-6,
                "design {checked} coef {j}: {} vs {}",
                fit.coefficients[j],
                beta[j]
            );
            assert!((fit.std_errors[j] - se[j]).abs() < 1e-6, "design {checked} se {j}");
        }
        checked += 1;
    }
}

#[test]
fn logit_two_by_two_closed_form() {
    // Exposed: 6 of 8 positive (odds 3). Unexposed: 2 of 6 positive (odds 1/2).
    let mut x1 = Vec::new();
    let mut y = Vec::new();
    for (exposed, pos, neg) in [(1.0, 6, 2), (0.0, 2, 4)] {
        for _ in 0..pos {
            x1.push(exposed);
            y.push(1.0);
        }
        for _ in 0..neg {
            x1.push(exposed);
            y.push(0.0);
        }
    }
    let n = y.len();
    let fit = fit_logistic(&design(ModelKind::Logit, vec![vec![1.0; n], x1], y), LOGIT_TOL, LOGIT_MAX_ITER).unwrap();
    assert!((fit.coefficients[1] - 6f64.ln()).abs() < 1e-6);
    assert!((fit.coefficients[0] - 0.5f64.ln()).abs() < 1e-6);
    let woolf = (1.0 / 6.0 + 1.0 / 2.0 + 1.0 / 2.0 + 1.0 / 4.0f64).sqrt();
    assert!((fit.std_errors[1] - woolf).abs() < 1e-6);
}

#[test]
fn oracle_inverse_round_trips() {
    let a = vec![
        vec![q(4.0), q(1.0), q(0.5)],
        vec![q(1.0), q(3.0), q(0.25)],
        vec![q(0.5), q(0.25), q(2.0)],
    ];
    let inv = inverse_exact(&a);
    for i in 0..3 {
        for j in 0..3 {
            let v = (0..3).fold(BigRational::zero(), |acc, k| acc + &a[i][k] * &inv[k][j]);
            let expected = if i == j { BigRational::one() } else { BigRational::zero() };
            assert!((v - expected).abs().is_zero());
        }
    }
}
