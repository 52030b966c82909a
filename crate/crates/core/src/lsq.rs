//! Damped Gauss-Newton (Levenberg-Marquardt) for small parameter vectors,
//! with forward-difference Jacobians.

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Stop once an accepted step improves the objective by less than this
    /// fraction.
    pub rel_tolerance: f64,
    /// Finite-difference step relative to `max(|theta_j|, 1)`.
    pub fd_step: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tolerance: 1e-10,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome<const P: usize> {
    pub params: [f64; P],
    pub converged: bool,
}

const LAMBDA_MAX: f64 = 1e16;

/// Minimizes `sum(r_i^2)` where `residuals(theta, out)` fills `out`.
pub fn minimize<const P: usize, F>(
    start: [f64; P],
    n_residuals: usize,
    settings: &LmSettings,
    mut residuals: F,
) -> LmOutcome<P>
where
    F: FnMut(&[f64; P], &mut [f64]),
{
    let sum_sq = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut theta = start;
    let mut r = vec![0.0; n_residuals];
    let mut r_trial = vec![0.0; n_residuals];
    let mut jac = vec![[0.0; P]; n_residuals];
    residuals(&theta, &mut r);
    let mut obj = sum_sq(&r);
    if !obj.is_finite() {
        return LmOutcome {
            params: theta,
            converged: false,
        };
    }
    let mut lambda = 1e-3;

    for _ in 0..settings.max_iterations {
        if obj == 0.0 {
            return LmOutcome {
                params: theta,
                converged: true,
            };
        }
        for j in 0..P {
            let h = settings.fd_step * theta[j].abs().max(1.0);
            let mut shifted = theta;
            shifted[j] += h;
            residuals(&shifted, &mut r_trial);
            for (row, (rt, r0)) in jac.iter_mut().zip(r_trial.iter().zip(&r)) {
                row[j] = (rt - r0) / h;
            }
        }
        let mut jtj = [[0.0; P]; P];
        let mut jtr = [0.0; P];
        for (row, ri) in jac.iter().zip(&r) {
            if !row.iter().all(|v| v.is_finite()) {
                continue;
            }
            for a in 0..P {
                jtr[a] += row[a] * ri;
                for b in a..P {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        for a in 0..P {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        loop {
            let mut system = jtj;
            for (a, row) in system.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-12);
            }
            let neg_g = jtr.map(|v| -v);
            let accepted = solve(system, neg_g).and_then(|delta| {
                let mut trial = theta;
                for (t, d) in trial.iter_mut().zip(delta) {
                    *t += d;
                }
                residuals(&trial, &mut r_trial);
                let trial_obj = sum_sq(&r_trial);
                (trial_obj.is_finite() && trial_obj < obj).then_some((trial, trial_obj))
            });
            match accepted {
                Some((trial, trial_obj)) => {
                    let improvement = (obj - trial_obj) / obj;
                    theta = trial;
                    obj = trial_obj;
                    std::mem::swap(&mut r, &mut r_trial);
                    lambda = (lambda / 10.0).max(1e-12);
                    if improvement < settings.rel_tolerance {
                        return LmOutcome {
                            params: theta,
                            converged: true,
                        };
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        // No descent direction left: a stationary point.
                        return LmOutcome {
                            params: theta,
                            converged: true,
                        };
                    }
                }
            }
        }
    }
    LmOutcome {
        params: theta,
        converged: false,
    }
}

/// Gaussian elimination with partial pivoting.
fn solve<const P: usize>(mut a: [[f64; P]; P], mut b: [f64; P]) -> Option<[f64; P]> {
    for col in 0..P {
        let pivot = (col..P).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..P {
            let f = a[row][col] / a[col][col];
            for k in col..P {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; P];
    for row in (0..P).rev() {
        let s: f64 = (row + 1..P).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
