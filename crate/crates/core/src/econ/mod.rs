//! Regression replication: design matrices, OLS and logit fits, and
//! confidence-interval overlap comparison across datasets.

mod design;
mod interval;
mod logit;
mod ols;
mod report;
mod spec;

pub use design::{build_design, DesignMatrix, DummyNote, INTERCEPT};
pub use interval::{ci_overlap_classify, Direction, IntervalComparison, Overlap, Qualitative, Significance};
pub use logit::{fit_logistic, SEPARATION_BOUND};
pub use ols::fit_ols;
pub use report::{
    replication_report, AgreementSummary, DatasetFit, DisjointEntry, ModelReport, ParameterComparison,
    ReplicationReport, ReportRow, REPORT_SCHEMA_VERSION,
};
pub use spec::{LevelSpec, ModelKind, ModelSpec, ReplicationSpec, Term};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::table::TableError;

/// Two-sided 95% normal critical value.
pub const Z_95: f64 = 1.959964;

/// Default logit convergence tolerance and iteration cap.
pub const LOGIT_TOL: f64 = 1e-8;
pub const LOGIT_MAX_ITER: usize = 50;

#[derive(Debug, Error)]
pub enum EconError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("model spec: {0}")]
    Spec(String),
    #[error("column {column} has non-numeric value {value:?}")]
    NonNumeric { column: String, value: String },
    #[error("predictor {0} is constant after filtering")]
    ConstantPredictor(String),
    #[error("{n} rows is not more than {p} parameters")]
    TooFewRows { n: usize, p: usize },
    #[error("design is rank deficient; linearly dependent columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("response {column} is not binary (found {value})")]
    NotBinary { column: String, value: f64 },
    #[error("response {0} is constant; the logit MLE does not exist")]
    ConstantResponse(String),
    #[error("separation detected after {iterations} iterations (coefficient {parameter} diverging)")]
    Separation { parameter: String, iterations: usize },
    #[error("no convergence in {iterations} iterations (max |gradient| {max_abs_gradient:e})")]
    NoConvergence { iterations: usize, max_abs_gradient: f64 },
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("odds ratios need a logit result")]
    NotLogit,
}

pub type Result<T, E = EconError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceType {
    Classical,
    Hc1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub max_abs_gradient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub model: String,
    pub kind: ModelKind,
    pub parameters: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    /// Two-sided Wald p-values.
    pub p_values: Vec<f64>,
    pub n: usize,
    pub covariance: CovarianceType,
    pub convergence: Option<Convergence>,
    /// Residual variance (OLS).
    pub sigma2: Option<f64>,
    /// Maximised log-likelihood (logit).
    pub log_likelihood: Option<f64>,
}

fn two_sided_p(beta: f64, se: f64) -> f64 {
    if se == 0.0 {
        return if beta == 0.0 { 1.0 } else { 0.0 };
    }
    let z = (beta / se).abs();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * std.cdf(-z)).clamp(0.0, 1.0)
}

impl RegressionResult {
    /// Wald intervals and p-values from estimates and standard errors.
    pub fn new(
        model: &str,
        kind: ModelKind,
        parameters: Vec<String>,
        coefficients: Vec<f64>,
        std_errors: Vec<f64>,
        n: usize,
    ) -> RegressionResult {
        let ci_lower = coefficients.iter().zip(&std_errors).map(|(b, s)| b - Z_95 * s).collect();
        let ci_upper = coefficients.iter().zip(&std_errors).map(|(b, s)| b + Z_95 * s).collect();
        let p_values = coefficients
            .iter()
            .zip(&std_errors)
            .map(|(&b, &s)| two_sided_p(b, s))
            .collect();
        RegressionResult {
            model: model.to_string(),
            kind,
            parameters,
            coefficients,
            std_errors,
            ci_lower,
            ci_upper,
            p_values,
            n,
            covariance: CovarianceType::Classical,
            convergence: None,
            sigma2: None,
            log_likelihood: None,
        }
    }

    pub fn index_of(&self, parameter: &str) -> Result<usize> {
        self.parameters
            .iter()
            .position(|p| p == parameter)
            .ok_or_else(|| EconError::UnknownParameter(parameter.to_string()))
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.ci_lower[i], self.ci_upper[i])
    }
}

/// 95% interval of the odds ratio `exp(β)`.
pub fn odds_ratio_ci(r: &RegressionResult, parameter: &str) -> Result<(f64, f64)> {
    if r.kind != ModelKind::Logit {
        return Err(EconError::NotLogit);
    }
    let i = r.index_of(parameter)?;
    let (b, s) = (r.coefficients[i], r.std_errors[i]);
    Ok(((b - Z_95 * s).exp(), (b + Z_95 * s).exp()))
}

/// Builds and fits one model on one table.
pub fn fit_model(t: &crate::table::Table, spec: &ReplicationSpec, model: &ModelSpec) -> Result<(DesignMatrix, RegressionResult)> {
    let d = build_design(t, &spec.recodes, &spec.filter, model)?;
    let r = match model.kind {
        ModelKind::Ols => fit_ols(&d, spec.robust_ols)?,
        ModelKind::Logit => fit_logistic(&d, LOGIT_TOL, LOGIT_MAX_ITER)?,
    };
    Ok((d, r))
}
