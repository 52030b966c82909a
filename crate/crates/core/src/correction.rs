//! Bias-correction maps fitted on (raw prediction, ground truth) pairs.
//!
//! Every family has the form `y = d * g((x - b) / a) + c` with `a > 0`:
//!
//! | family | `g(u)`                          | domain of `u`     |
//! |--------|---------------------------------|-------------------|
//! | linear | `u`                             | all reals         |
//! | logit  | `-ln(1 / (u + 1/2) - 1)`        | `(-1/2, 1/2)`     |
//! | sinh   | `sinh(u)`                       | all reals         |
//! | tan    | `tan(u)`                        | `(-pi/2, pi/2)`   |
//!
//! The fitted curve maps raw forest output to corrected output directly.
//! Inputs outside a bounded domain are clamped just inside it, so the map is
//! total on the reals.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::fit_simple;
use crate::error::{Error, Result};
use crate::lsq::{minimize, LmSettings};

/// Relative margin kept between clamped inputs and a domain boundary.
pub const CLAMP_EPS: f64 = 1e-6;
/// Weight on the distance outside the domain during fitting.
pub const DOMAIN_PENALTY: f64 = 1e6;
/// How much worse than the linear fit a curved family may end up before the
/// near-linear member of that family is substituted.
pub const LINEAR_SLACK: f64 = 1e-9;
/// Relative SSE difference (against the truth sum of squares) treated as a
/// tie by [`select_family`].
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Width multiple used for the near-linear starting point.
const NEAR_LINEAR_SCALE: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionFamily {
    Linear,
    Logit,
    Sinh,
    Tan,
}

impl CorrectionFamily {
    /// In tie-break preference order.
    pub const ALL: [CorrectionFamily; 4] = [
        CorrectionFamily::Logit,
        CorrectionFamily::Sinh,
        CorrectionFamily::Tan,
        CorrectionFamily::Linear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrectionFamily::Linear => "linear",
            CorrectionFamily::Logit => "logit",
            CorrectionFamily::Sinh => "sinh",
            CorrectionFamily::Tan => "tan",
        }
    }

    fn shape(self, u: f64) -> f64 {
        match self {
            CorrectionFamily::Linear => u,
            CorrectionFamily::Logit => logit_unchecked(u),
            CorrectionFamily::Sinh => u.sinh(),
            CorrectionFamily::Tan => u.tan(),
        }
    }

    /// `g'(0)`.
    fn center_slope(self) -> f64 {
        match self {
            CorrectionFamily::Logit => 4.0,
            _ => 1.0,
        }
    }

    /// Half-width of the clamped domain in units of `u`.
    fn half_width(self) -> Option<f64> {
        match self {
            CorrectionFamily::Logit => Some(0.5 - CLAMP_EPS),
            CorrectionFamily::Tan => Some(FRAC_PI_2 - CLAMP_EPS),
            CorrectionFamily::Linear | CorrectionFamily::Sinh => None,
        }
    }
}

impl fmt::Display for CorrectionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrectionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(CorrectionFamily::Linear),
            "logit" => Ok(CorrectionFamily::Logit),
            "sinh" => Ok(CorrectionFamily::Sinh),
            "tan" => Ok(CorrectionFamily::Tan),
            other => Err(Error::validation("family", format!("unknown family `{other}`"))),
        }
    }
}

/// `1 / (1 + e^-x) - 1/2`: the logistic curve shifted through the origin.
pub fn logistic_shifted(x: f64) -> f64 {
    0.5 * (0.5 * x).tanh()
}

/// `-ln(1 / (x + 1/2) - 1)`, the inverse of [`logistic_shifted`], defined on
/// the open interval `(-1/2, 1/2)`.
pub fn logit_core(x: f64) -> Result<f64> {
    if x > -0.5 && x < 0.5 {
        Ok(logit_unchecked(x))
    } else {
        Err(Error::Domain {
            value: x,
            domain: "(-1/2, 1/2)",
        })
    }
}

// Same function written as 2 atanh(2x), which stays accurate near 0.
fn logit_unchecked(x: f64) -> f64 {
    2.0 * (2.0 * x).atanh()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionModel {
    pub family: CorrectionFamily,
    /// x scaling, always positive.
    pub a: f64,
    /// x offset.
    pub b: f64,
    /// y offset.
    pub c: f64,
    /// y scaling.
    pub d: f64,
    pub fit_sse: f64,
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Set when the optimizer ran out of iterations on the returned fit.
    pub warning: bool,
}

impl CorrectionModel {
    pub fn identity() -> Self {
        Self {
            family: CorrectionFamily::Linear,
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
            fit_sse: 0.0,
            n_points: 0,
            x_min: 0.0,
            x_max: 0.0,
            warning: false,
        }
    }

    /// Clamped input interval, for families with a bounded domain.
    pub fn domain(&self) -> Option<(f64, f64)> {
        domain(self.family, self.a, self.b)
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_params(self.family, [self.a, self.b, self.c, self.d], x)
    }

    pub fn apply(&self, predictions: &[f64]) -> Vec<f64> {
        apply_correction(self, predictions)
    }
}

fn domain(family: CorrectionFamily, a: f64, b: f64) -> Option<(f64, f64)> {
    family.half_width().map(|h| (b - a * h, b + a * h))
}

fn eval_params(family: CorrectionFamily, [a, b, c, d]: [f64; 4], x: f64) -> f64 {
    let x = match domain(family, a, b) {
        Some((lo, hi)) => x.clamp(lo, hi),
        None => x,
    };
    d * family.shape((x - b) / a) + c
}

pub fn eval_correction(model: &CorrectionModel, x: f64) -> f64 {
    model.eval(x)
}

pub fn apply_correction(model: &CorrectionModel, predictions: &[f64]) -> Vec<f64> {
    predictions.iter().map(|&x| model.eval(x)).collect()
}

fn sse(family: CorrectionFamily, params: [f64; 4], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (eval_params(family, params, xi) - yi).powi(2))
        .sum()
}

fn check_inputs(predictions: &[f64], truths: &[f64]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: predictions.len(),
            actual: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("fitting data"));
    }
    if predictions.iter().chain(truths).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value in fitting data".into()));
    }
    if predictions.iter().all(|&p| p == predictions[0]) {
        return Err(Error::Degenerate("all predictions are identical".into()));
    }
    Ok(())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Candidate {
    params: [f64; 4],
    sse: f64,
    warning: bool,
}

/// Fits one correction family by least squares of truth on prediction.
///
/// The linear family is solved in closed form. Curved families run damped
/// least squares in `(ln a, b, c, d)` from three starts (a near-linear member
/// of the family, a curve spanning 1.2x the prediction range, and one
/// spanning half that); the starts themselves stay in the candidate pool, so
/// a curved fit is never materially worse than the linear one.
pub fn fit_correction(
    predictions: &[f64],
    truths: &[f64],
    family: CorrectionFamily,
) -> Result<CorrectionModel> {
    check_inputs(predictions, truths)?;
    let (slope, intercept) = fit_simple(predictions, truths)?;
    let x_min = predictions.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = predictions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let linear = [1.0, 0.0, intercept, slope];
    let linear_sse = sse(CorrectionFamily::Linear, linear, predictions, truths);

    let best = if family == CorrectionFamily::Linear {
        Candidate {
            params: linear,
            sse: linear_sse,
            warning: false,
        }
    } else {
        fit_curved(family, predictions, truths, (slope, intercept), (x_min, x_max), linear_sse)
    };
    let [a, b, c, d] = best.params;
    Ok(CorrectionModel {
        family,
        a,
        b,
        c,
        d,
        fit_sse: best.sse,
        n_points: predictions.len(),
        x_min,
        x_max,
        warning: best.warning,
    })
}

fn fit_curved(
    family: CorrectionFamily,
    x: &[f64],
    y: &[f64],
    (slope, intercept): (f64, f64),
    (x_min, x_max): (f64, f64),
    linear_sse: f64,
) -> Candidate {
    let range = x_max - x_min;
    let center = median(x);
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let g0 = family.center_slope();

    let near_linear = |a: f64| [a, center, intercept + slope * center, slope * a / g0];
    let curved = |a: f64| [a, center, y_mean, slope * a / g0];
    let starts = [
        near_linear(NEAR_LINEAR_SCALE * range),
        curved(1.2 * range),
        curved(0.6 * range),
    ];

    let covers = |p: &[f64; 4]| match domain(family, p[0], p[1]) {
        Some((lo, hi)) => lo <= x_min && x_max <= hi,
        None => true,
    };
    let mut pool: Vec<Candidate> = Vec::with_capacity(2 * starts.len());
    let settings = LmSettings::default();
    for start in starts {
        pool.push(Candidate {
            params: start,
            sse: sse(family, start, x, y),
            warning: false,
        });
        let theta0 = [start[0].ln(), start[1], start[2], start[3]];
        let out = minimize(theta0, x.len(), &settings, |t, r| {
            guarded_residuals(family, t, x, y, r)
        });
        let params = [out.params[0].exp(), out.params[1], out.params[2], out.params[3]];
        pool.push(Candidate {
            params,
            sse: sse(family, params, x, y),
            warning: !out.converged,
        });
    }

    let mut best = pool
        .into_iter()
        .filter(|c| c.sse.is_finite() && c.params.iter().all(|v| v.is_finite()) && c.params[0] > 0.0)
        .filter(|c| covers(&c.params))
        .min_by(|p, q| p.sse.total_cmp(&q.sse))
        .unwrap_or(Candidate {
            params: starts[0],
            sse: sse(family, starts[0], x, y),
            warning: false,
        });

    // Widen the near-linear member until it is within slack of the line.
    let mut scale = NEAR_LINEAR_SCALE;
    while best.sse > linear_sse + LINEAR_SLACK && scale < 1e12 {
        scale *= 100.0;
        let p = near_linear(scale * range);
        let s = sse(family, p, x, y);
        if s < best.sse {
            best = Candidate {
                params: p,
                sse: s,
                warning: false,
            };
        }
    }
    best
}

/// Residuals with points outside the clamped domain charged
/// `DOMAIN_PENALTY` per unit of distance on top of their clamped residual.
fn guarded_residuals(family: CorrectionFamily, theta: &[f64; 4], x: &[f64], y: &[f64], out: &mut [f64]) {
    let params = [theta[0].exp(), theta[1], theta[2], theta[3]];
    let dom = domain(family, params[0], params[1]);
    for ((r, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
        let f = eval_params(family, params, xi);
        *r = match dom {
            Some((lo, hi)) if xi < lo || xi > hi => {
                let dist = if xi < lo { lo - xi } else { xi - hi };
                (f - yi).abs() + DOMAIN_PENALTY * dist
            }
            _ => f - yi,
        };
    }
}

/// Fits every family and keeps the lowest SSE. Differences within
/// `TIE_TOLERANCE` times the truth sum of squares count as ties, resolved in
/// the order logit, sinh, tan, linear.
pub fn select_family(
    predictions: &[f64],
    truths: &[f64],
) -> Result<(CorrectionFamily, CorrectionModel)> {
    let fits = fit_all_families(predictions, truths)?;
    let y_mean = truths.iter().sum::<f64>() / truths.len() as f64;
    let tss: f64 = truths.iter().map(|y| (y - y_mean).powi(2)).sum();
    let tol = TIE_TOLERANCE * tss.max(f64::MIN_POSITIVE);
    let mut best: Option<CorrectionModel> = None;
    let mut last_err = None;
    for fit in fits {
        match fit {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.fit_sse < b.fit_sse - tol) {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(m) => Ok((m.family, m)),
        None => Err(last_err.expect("at least one family was attempted")),
    }
}

/// One fit per family, in [`CorrectionFamily::ALL`] order.
pub fn fit_all_families(predictions: &[f64], truths: &[f64]) -> Result<Vec<Result<CorrectionModel>>> {
    check_inputs(predictions, truths)?;
    Ok(CorrectionFamily::ALL
        .iter()
        .map(|&f| fit_correction(predictions, truths, f))
        .collect())
}
