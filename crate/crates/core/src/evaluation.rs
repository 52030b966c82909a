//! Prediction quality and bias diagnostics.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::baseline::fit_simple;
use crate::error::{Error, Result};

/// Sequences up to this length get an exact runs-test p-value.
pub const EXACT_RUNS_MAX: usize = 20;

/// Residuals with magnitude at or below this fraction of the largest truth
/// magnitude count as exact zeros and are left out of the runs test.
pub const ZERO_RESIDUAL_TOL: f64 = 1e-12;

fn check_pair(predictions: &[f64], truths: &[f64]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: predictions.len(),
            actual: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    Ok(())
}

pub fn mse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check_pair(predictions, truths)?;
    let sum: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sum / predictions.len() as f64)
}

/// Least-squares line of truth on prediction: `(slope, intercept)`.
pub fn fit_line(predictions: &[f64], truths: &[f64]) -> Result<(f64, f64)> {
    check_pair(predictions, truths)?;
    if predictions.iter().all(|&p| p == predictions[0]) {
        return Err(Error::Degenerate("predictions are constant".into()));
    }
    fit_simple(predictions, truths)
}

pub fn pearson(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check_pair(predictions, truths)?;
    let n = predictions.len() as f64;
    let mx = predictions.iter().sum::<f64>() / n;
    let my = truths.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in predictions.iter().zip(truths) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// `truth - (slope * prediction + intercept)` per row, in input order.
pub fn line_residuals(predictions: &[f64], truths: &[f64]) -> Result<Vec<f64>> {
    let (slope, intercept) = fit_line(predictions, truths)?;
    Ok(predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| t - (slope * p + intercept))
        .collect())
}

/// Residuals about the truth-on-prediction line, ordered by ascending
/// prediction (ties keep input order).
pub fn linearized_residuals(predictions: &[f64], truths: &[f64]) -> Result<Vec<f64>> {
    let resid = line_residuals(predictions, truths)?;
    Ok(order_by_prediction(predictions)
        .into_iter()
        .map(|i| resid[i])
        .collect())
}

pub(crate) fn order_by_prediction(predictions: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| predictions[a].total_cmp(&predictions[b]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Pos,
    #[serde(rename = "-")]
    Neg,
}

/// Signs of residuals, skipping those within `tol` of zero.
pub fn residual_signs(residuals: &[f64], tol: f64) -> Vec<Sign> {
    residuals
        .iter()
        .filter(|r| r.abs() > tol)
        .map(|&r| if r > 0.0 { Sign::Pos } else { Sign::Neg })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunsMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunsTestResult {
    pub n_pos: usize,
    pub n_neg: usize,
    pub runs: usize,
    pub mean: f64,
    pub variance: f64,
    /// `(runs - mean) / sd`, without continuity correction.
    pub z: f64,
    /// Probability of observing this few runs or fewer under randomness.
    pub p_one_tailed: f64,
    pub method: RunsMethod,
}

pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn count_runs(signs: &[Sign]) -> usize {
    if signs.is_empty() {
        return 0;
    }
    1 + signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of arrangements of `n_pos` pluses and `n_neg` minuses with exactly
/// `runs` runs.
pub fn arrangements_with_runs(n_pos: usize, n_neg: usize, runs: usize) -> u128 {
    if runs < 2 || n_pos == 0 || n_neg == 0 {
        return u128::from(runs == 1 && (n_pos == 0) != (n_neg == 0));
    }
    let k = runs / 2;
    if runs.is_multiple_of(2) {
        2 * binomial(n_pos - 1, k - 1) * binomial(n_neg - 1, k - 1)
    } else {
        binomial(n_pos - 1, k - 1) * binomial(n_neg - 1, k) + binomial(n_pos - 1, k) * binomial(n_neg - 1, k - 1)
    }
}

/// Exact `P(R <= runs)` from the combinatorial distribution of run counts.
pub fn exact_runs_cdf(n_pos: usize, n_neg: usize, runs: usize) -> f64 {
    let total = binomial(n_pos + n_neg, n_pos);
    let hits: u128 = (2..=runs).map(|r| arrangements_with_runs(n_pos, n_neg, r)).sum();
    hits as f64 / total as f64
}

/// One-tailed Wald-Wolfowitz runs test for clustering (too few runs).
///
/// Exact for at most [`EXACT_RUNS_MAX`] signs; otherwise the normal
/// approximation with a half-run continuity correction.
pub fn runs_test(signs: &[Sign]) -> Result<RunsTestResult> {
    let n_pos = signs.iter().filter(|&&s| s == Sign::Pos).count();
    let n_neg = signs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(
            "runs test needs at least one positive and one negative sign".into(),
        ));
    }
    let runs = count_runs(signs);
    let (p, q) = (n_pos as f64, n_neg as f64);
    let n = p + q;
    let mean = 1.0 + 2.0 * p * q / n;
    let variance = 2.0 * p * q * (2.0 * p * q - n) / (n * n * (n - 1.0));
    let sd = variance.sqrt();
    let z = if sd > 0.0 { (runs as f64 - mean) / sd } else { 0.0 };
    let (p_one_tailed, method) = if signs.len() <= EXACT_RUNS_MAX {
        (exact_runs_cdf(n_pos, n_neg, runs), RunsMethod::Exact)
    } else {
        let zc = (runs as f64 + 0.5 - mean) / sd;
        (standard_normal_cdf(zc), RunsMethod::NormalApprox)
    };
    Ok(RunsTestResult {
        n_pos,
        n_neg,
        runs,
        mean,
        variance,
        z,
        p_one_tailed: p_one_tailed.clamp(0.0, 1.0),
        method,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub mse: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Absent when the residual signs do not include both signs.
    pub runs_test: Option<RunsTestResult>,
    pub truth_range: (f64, f64),
    pub prediction_range: (f64, f64),
}

impl EvaluationReport {
    pub const CSV_HEADER: [&'static str; 15] = [
        "n",
        "mse",
        "slope",
        "intercept",
        "runs",
        "n_pos",
        "n_neg",
        "z",
        "p_one_tailed",
        "runs_method",
        "truth_min",
        "truth_max",
        "prediction_min",
        "prediction_max",
        "range_coverage",
    ];

    /// Prediction range width as a fraction of the truth range width.
    pub fn range_coverage(&self) -> f64 {
        let tw = self.truth_range.1 - self.truth_range.0;
        if tw == 0.0 {
            return f64::NAN;
        }
        (self.prediction_range.1 - self.prediction_range.0) / tw
    }

    pub fn csv_row(&self) -> Vec<String> {
        let rt = self.runs_test.as_ref();
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            self.n.to_string(),
            self.mse.to_string(),
            self.slope.to_string(),
            self.intercept.to_string(),
            opt(rt.map(|r| r.runs.to_string())),
            opt(rt.map(|r| r.n_pos.to_string())),
            opt(rt.map(|r| r.n_neg.to_string())),
            opt(rt.map(|r| r.z.to_string())),
            opt(rt.map(|r| r.p_one_tailed.to_string())),
            opt(rt.map(|r| match r.method {
                RunsMethod::Exact => "exact".to_string(),
                RunsMethod::NormalApprox => "normal_approx".to_string(),
            })),
            self.truth_range.0.to_string(),
            self.truth_range.1.to_string(),
            self.prediction_range.0.to_string(),
            self.prediction_range.1.to_string(),
            self.range_coverage().to_string(),
        ]
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

pub fn evaluate(predictions: &[f64], truths: &[f64]) -> Result<EvaluationReport> {
    check_pair(predictions, truths)?;
    if predictions.len() < 3 {
        return Err(Error::Degenerate("evaluation needs at least 3 points".into()));
    }
    let mse = mse(predictions, truths)?;
    let (slope, intercept) = fit_line(predictions, truths)?;
    let resid = linearized_residuals(predictions, truths)?;
    let scale = truths.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(f64::MIN_POSITIVE);
    let signs = residual_signs(&resid, ZERO_RESIDUAL_TOL * scale);
    Ok(EvaluationReport {
        n: predictions.len(),
        mse,
        slope,
        intercept,
        runs_test: runs_test(&signs).ok(),
        truth_range: min_max(truths),
        prediction_range: min_max(predictions),
    })
}
