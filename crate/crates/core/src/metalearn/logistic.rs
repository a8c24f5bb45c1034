//! L2-regularised logistic regression fitted by damped Newton steps.

use serde::{Deserialize, Serialize};

use super::MetaDataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticHyper {
    pub l2_strength: f64,
    pub max_iterations: usize,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        LogisticHyper { l2_strength: 0.1, max_iterations: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Training medians used for missing values.
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
    /// Standard deviations; 0 marks a constant column, which gets no weight.
    pub scales: Vec<f64>,
    /// Weights on standardized features.
    pub weights: Vec<f64>,
    pub intercept: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl LogisticModel {
    fn standardize<'a>(&'a self, row: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        row.iter().enumerate().map(move |(j, &v)| {
            if self.scales[j] == 0.0 {
                return 0.0;
            }
            let v = if v.is_nan() { self.medians[j] } else { v };
            (v - self.means[j]) / self.scales[j]
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + self.standardize(row).zip(&self.weights).map(|(z, w)| z * w).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

/// Minimises mean log loss + (l2/2)·|w|² over standardized, median-imputed
/// features. The intercept is not penalised.
pub fn train_logistic(ds: &MetaDataset, h: &LogisticHyper) -> Result<LogisticModel> {
    if !(h.l2_strength >= 0.0) || !h.l2_strength.is_finite() {
        return Err(Error::Validation(format!("l2_strength must be a finite value ≥ 0, got {}", h.l2_strength)));
    }
    let (n, d) = (ds.len(), ds.n_features());
    if n == 0 {
        return Err(Error::Validation("cannot train on an empty dataset".into()));
    }
    let mut medians = vec![0.0; d];
    let mut means = vec![0.0; d];
    let mut scales = vec![0.0; d];
    for j in 0..d {
        medians[j] = median(ds.x.iter().map(|r| r[j]).filter(|v| !v.is_nan()).collect());
        let col: Vec<f64> = ds.x.iter().map(|r| if r[j].is_nan() { medians[j] } else { r[j] }).collect();
        let (m, s) = super::mean_std(&col);
        means[j] = m;
        scales[j] = if s > 1e-12 * m.abs().max(1.0) { s } else { 0.0 };
    }
    let mut model = LogisticModel { medians, means, scales, weights: vec![0.0; d], intercept: 0.0 };
    let active: Vec<usize> = (0..d).filter(|&j| model.scales[j] > 0.0).collect();
    // design matrix over active columns, intercept last
    let k = active.len() + 1;
    let z: Vec<Vec<f64>> = ds
        .x
        .iter()
        .map(|r| {
            let s: Vec<f64> = model.standardize(r).collect();
            let mut row: Vec<f64> = active.iter().map(|&j| s[j]).collect();
            row.push(1.0);
            row
        })
        .collect();
    let y: Vec<f64> = ds.y.iter().map(|&b| b as u8 as f64).collect();
    let lambda = h.l2_strength;
    let inv_n = 1.0 / n as f64;
    let objective = |beta: &[f64]| -> f64 {
        let loss: f64 = z.iter().zip(&y).map(|(r, &t)| {
            let s: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
            softplus(s) - t * s
        }).sum();
        loss * inv_n + 0.5 * lambda * beta[..k - 1].iter().map(|b| b * b).sum::<f64>()
    };
    let mut beta = vec![0.0; k];
    let mut f = objective(&beta);
    for _ in 0..h.max_iterations {
        let mut grad = vec![0.0; k];
        let mut hess = Matrix::square(k);
        for (r, &t) in z.iter().zip(&y) {
            let p = sigmoid(r.iter().zip(&beta).map(|(a, b)| a * b).sum());
            let w = p * (1.0 - p);
            for a in 0..k {
                grad[a] += (p - t) * r[a] * inv_n;
                let wa = w * r[a] * inv_n;
                for b in 0..=a {
                    hess[(a, b)] += wa * r[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
            if a < k - 1 {
                grad[a] += lambda * beta[a];
                hess[(a, a)] += lambda;
            }
            hess[(a, a)] += 1e-10;
        }
        if grad.iter().all(|g| g.abs() < 1e-10) {
            break;
        }
        let step = cholesky_solve(&hess, &grad)?;
        let slope: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
        let mut t = 1.0;
        let mut next = beta.clone();
        let mut accepted = false;
        for _ in 0..40 {
            for a in 0..k {
                next[a] = beta[a] - t * step[a];
            }
            let fn_ = objective(&next);
            if fn_ <= f + 1e-4 * t * slope {
                f = fn_;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        let moved = step.iter().map(|s| (t * s).abs()).fold(0.0, f64::max);
        beta.clone_from(&next);
        if moved < 1e-10 {
            break;
        }
    }
    for (i, &j) in active.iter().enumerate() {
        model.weights[j] = beta[i];
    }
    model.intercept = beta[k - 1];
    Ok(model)
}
