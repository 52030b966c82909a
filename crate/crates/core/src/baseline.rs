//! Ordinary least-squares multiple linear regression.
//!
//! Solved by Householder QR on the design matrix `[1 | X]`; the normal
//! equations are never formed.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// A column is treated as linearly dependent when its `R` diagonal falls below
/// this fraction of the largest diagonal magnitude.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        predict_linear(self, row)
    }
}

pub fn predict_linear(model: &LinearModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.coefficients.len() {
        return Err(Error::LengthMismatch {
            expected: model.coefficients.len(),
            actual: row.len(),
        });
    }
    Ok(model.intercept + model.coefficients.iter().zip(row).map(|(c, x)| c * x).sum::<f64>())
}

pub fn fit_ols(data: &Dataset) -> Result<LinearModel> {
    let p = data.n_features();
    let mut names = Vec::with_capacity(p + 1);
    names.push("intercept".to_string());
    names.extend(data.feature_names().iter().cloned());
    fit_design(data.n_rows(), p, |i, j| data.value(i, j), data.target(), &names)
}

/// OLS of `y` on a single regressor `x`: returns `(slope, intercept)`.
pub fn fit_simple(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let names = ["intercept".to_string(), "x".to_string()];
    let m = fit_design(x.len(), 1, |i, _| x[i], y, &names)?;
    Ok((m.coefficients[0], m.intercept))
}

fn fit_design(
    n: usize,
    p: usize,
    feature: impl Fn(usize, usize) -> f64,
    y: &[f64],
    names: &[String],
) -> Result<LinearModel> {
    let cols = p + 1;
    if n < cols {
        return Err(Error::Degenerate(format!(
            "{n} rows cannot determine {cols} coefficients"
        )));
    }
    // Column-major design matrix so each Householder step works on contiguous memory.
    let mut a = vec![0.0; n * cols];
    for i in 0..n {
        a[i] = 1.0;
    }
    for j in 0..p {
        let col = &mut a[(j + 1) * n..(j + 2) * n];
        for (i, v) in col.iter_mut().enumerate() {
            *v = feature(i, j);
        }
    }
    let mut rhs = y.to_vec();
    let mut diag = vec![0.0; cols];

    for k in 0..cols {
        let (head, tail) = a.split_at_mut(k * n + n);
        let col_k = &mut head[k * n..];
        let norm = col_k[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if col_k[k] > 0.0 { -norm } else { norm };
        // v = x - alpha e_k, stored in place; R_kk = alpha
        col_k[k] -= alpha;
        let vnorm2 = col_k[k..].iter().map(|v| v * v).sum::<f64>();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        let v = &col_k[k..];
        for j in (k + 1)..cols {
            let col_j = &mut tail[(j - k - 1) * n..(j - k) * n];
            let dot: f64 = v.iter().zip(&col_j[k..]).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (c, vi) in col_j[k..].iter_mut().zip(v) {
                *c -= s * vi;
            }
        }
        let dot: f64 = v.iter().zip(&rhs[k..]).map(|(a, b)| a * b).sum();
        let s = 2.0 * dot / vnorm2;
        for (c, vi) in rhs[k..].iter_mut().zip(v) {
            *c -= s * vi;
        }
    }

    let max_diag = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let dependent: Vec<String> = diag
        .iter()
        .enumerate()
        .filter(|(_, d)| max_diag == 0.0 || d.abs() < RANK_TOLERANCE * max_diag)
        .map(|(j, _)| names[j].clone())
        .collect();
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }

    // Back substitution on R beta = Q^T y.
    let mut beta = vec![0.0; cols];
    for k in (0..cols).rev() {
        let mut s = rhs[k];
        for j in (k + 1)..cols {
            s -= a[j * n + k] * beta[j];
        }
        beta[k] = s / diag[k];
    }
    Ok(LinearModel {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
    })
}
