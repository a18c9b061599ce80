//! L2-regularised logistic regression fitted by Newton/IRLS.
//!
//! The objective is the negative log-likelihood summed over instances plus
//! `lambda / 2 * ||w||^2`; the intercept is not penalised. Probabilities are
//! clipped to `[1e-12, 1 - 1e-12]` inside the log-likelihood only.

use serde::{Deserialize, Serialize};

use crate::data::LabelVector;
use crate::error::{Error, Result};

const PROB_FLOOR: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            lambda: 1e-3,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParam(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParam(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParam("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    /// Affine score `intercept + w·x` for every row.
    pub fn decision(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        if features.len() != self.coefficients.len() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.coefficients.len(),
                features.len()
            )));
        }
        let n = features.first().map_or(0, Vec::len);
        if let Some(j) = features.iter().position(|c| c.len() != n) {
            return Err(Error::Dimension(format!("feature column {j} has a different length")));
        }
        let mut eta = vec![self.intercept; n];
        for (w, col) in self.coefficients.iter().zip(features) {
            for (e, x) in eta.iter_mut().zip(col) {
                *e += w * x;
            }
        }
        Ok(eta)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Probabilistic output of `model` for each row of the column-major
/// `features`.
pub fn predict_logistic(model: &LogisticModel, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(model.decision(features)?.into_iter().map(sigmoid).collect())
}

/// The penalised negative log-likelihood over a fixed design. Parameters are
/// laid out as `[intercept, w_1, ..., w_p]`.
pub struct LogisticObjective<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [u8],
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(features: &'a [Vec<f64>], labels: &'a LabelVector, lambda: f64) -> Result<Self> {
        let n = labels.len();
        if let Some(j) = features.iter().position(|c| c.len() != n) {
            return Err(Error::Dimension(format!(
                "feature column {j} has {} rows for {n} labels",
                features[j].len()
            )));
        }
        for (j, col) in features.iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidParam(format!("non-finite feature at ({i}, {j})")));
            }
        }
        Ok(LogisticObjective {
            features,
            labels: labels.as_slice(),
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.len() + 1
    }

    fn eta(&self, params: &[f64]) -> Vec<f64> {
        let mut eta = vec![params[0]; self.labels.len()];
        for (w, col) in params[1..].iter().zip(self.features) {
            for (e, x) in eta.iter_mut().zip(col) {
                *e += w * x;
            }
        }
        eta
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        0.5 * self.lambda * params[1..].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let nll: f64 = self
            .eta(params)
            .iter()
            .zip(self.labels)
            .map(|(&e, &y)| {
                let p = sigmoid(e).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
                if y == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum();
        nll + self.penalty(params)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let resid: Vec<f64> = self
            .eta(params)
            .iter()
            .zip(self.labels)
            .map(|(&e, &y)| sigmoid(e) - f64::from(y))
            .collect();
        let mut g = Vec::with_capacity(self.dim());
        g.push(resid.iter().sum());
        for (w, col) in params[1..].iter().zip(self.features) {
            let dot: f64 = resid.iter().zip(col).map(|(r, x)| r * x).sum();
            g.push(dot + self.lambda * w);
        }
        g
    }

    fn hessian(&self, params: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let weights: Vec<f64> = self
            .eta(params)
            .iter()
            .map(|&e| {
                let p = sigmoid(e);
                p * (1.0 - p)
            })
            .collect();
        let column = |j: usize| -> Option<&[f64]> {
            if j == 0 {
                None
            } else {
                Some(&self.features[j - 1])
            }
        };
        let mut h = vec![vec![0.0; d]; d];
        for a in 0..d {
            for b in a..d {
                let v: f64 = match (column(a), column(b)) {
                    (None, None) => weights.iter().sum(),
                    (None, Some(xb)) => weights.iter().zip(xb).map(|(w, x)| w * x).sum(),
                    (Some(xa), None) => weights.iter().zip(xa).map(|(w, x)| w * x).sum(),
                    (Some(xa), Some(xb)) => weights
                        .iter()
                        .zip(xa.iter().zip(xb))
                        .map(|(w, (x, z))| w * x * z)
                        .sum(),
                };
                h[a][b] = v;
                h[b][a] = v;
            }
        }
        for (j, row) in h.iter_mut().enumerate().skip(1) {
            row[j] += self.lambda;
        }
        h
    }
}

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky
/// factorisation. Returns `None` when a pivot is non-positive or negligible
/// relative to the diagonal.
fn solve_spd(mut a: Vec<Vec<f64>>, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 1e-13 * scale) {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= a[i][k] * y[k];
        }
        y[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= a[k][i] * y[k];
        }
        y[i] /= a[i][i];
    }
    y.iter().all(|v| v.is_finite()).then_some(y)
}

/// A fitted model together with the objective value after every accepted
/// step (the first entry is the starting point).
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub objective_trace: Vec<f64>,
}

pub fn fit_logistic(features: &[Vec<f64>], labels: &LabelVector, config: &LogisticConfig) -> Result<LogisticModel> {
    let start = vec![0.0; features.len() + 1];
    Ok(fit_logistic_from(features, labels, config, &start)?.model)
}

/// Fits from an explicit starting point `[intercept, w_1, ..., w_p]`.
pub fn fit_logistic_from(
    features: &[Vec<f64>],
    labels: &LabelVector,
    config: &LogisticConfig,
    start: &[f64],
) -> Result<LogisticFit> {
    config.validate()?;
    if !labels.has_both_classes() {
        return Err(Error::SingleClass("logistic fit"));
    }
    let objective = LogisticObjective::new(features, labels, config.lambda)?;
    if start.len() != objective.dim() {
        return Err(Error::Dimension(format!(
            "start point has {} parameters, expected {}",
            start.len(),
            objective.dim()
        )));
    }

    let mut params = start.to_vec();
    let mut value = objective.value(&params);
    let mut trace = vec![value];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        let grad = objective.gradient(&params);
        if max_abs(&grad) <= config.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let newton = solve_spd(objective.hessian(&params), &neg_grad);
        let accepted = newton
            .as_deref()
            .and_then(|dir| line_search(&objective, &params, value, dir, 1.0))
            .or_else(|| {
                // gradient descent with backtracking from a unit-length step
                let norm = neg_grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                line_search(&objective, &params, value, &neg_grad, 1.0 / norm.max(1.0))
            });

        let Some((next, next_value)) = accepted else {
            // no descent direction left at working precision
            converged = true;
            break;
        };
        let step = params
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        params = next;
        value = next_value;
        trace.push(value);
        if step <= config.tol {
            converged = true;
            break;
        }
    }
    if !converged && max_abs(&objective.gradient(&params)) <= config.tol {
        converged = true;
    }

    Ok(LogisticFit {
        model: LogisticModel {
            intercept: params[0],
            coefficients: params[1..].to_vec(),
            lambda: config.lambda,
            converged,
            iterations,
        },
        objective_trace: trace,
    })
}

/// Step-halving along `dir`; returns the first point whose objective does
/// not exceed `value`, skipping points that leave the parameters unchanged.
fn line_search(
    objective: &LogisticObjective<'_>,
    params: &[f64],
    value: f64,
    dir: &[f64],
    initial: f64,
) -> Option<(Vec<f64>, f64)> {
    let mut t = initial;
    for _ in 0..MAX_HALVINGS {
        let candidate: Vec<f64> = params.iter().zip(dir).map(|(p, d)| p + t * d).collect();
        if candidate == params {
            return None;
        }
        let v = objective.value(&candidate);
        if v <= value {
            return Some((candidate, v));
        }
        t *= 0.5;
    }
    None
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
