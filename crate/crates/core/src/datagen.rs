//! Synthetic classifier pools with known structure.
//!
//! Each column is driven by a Gaussian latent
//! `z = a (2y - 1) + b g + e`, where `g` is noise shared by every column and
//! `e` is private to the column. The calibrated score is `sigmoid(c z)` with
//! `c = 1 / sqrt(a² + b² + 1)`, and the emitted score applies the
//! logit-affine map `sigmoid(alpha · c z + beta)`.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{LabelVector, PredictionMatrix};
use crate::error::{Error, Result};
use crate::rng;
use crate::stack::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub name: String,
    /// Class separation `a >= 0`.
    pub signal: f64,
    /// Loading `b` on the shared noise.
    pub shared_loading: f64,
    pub calib_alpha: f64,
    pub calib_beta: f64,
    pub bags: usize,
}

impl ClassifierSpec {
    /// Calibrated classifier with a single bag.
    pub fn new(name: impl Into<String>, signal: f64, shared_loading: f64) -> ClassifierSpec {
        ClassifierSpec {
            name: name.into(),
            signal,
            shared_loading,
            calib_alpha: 1.0,
            calib_beta: 0.0,
            bags: 1,
        }
    }

    pub fn miscalibrated(mut self, alpha: f64, beta: f64) -> ClassifierSpec {
        self.calib_alpha = alpha;
        self.calib_beta = beta;
        self
    }

    pub fn with_bags(mut self, bags: usize) -> ClassifierSpec {
        self.bags = bags;
        self
    }

    fn scale(&self) -> f64 {
        1.0 / (self.signal * self.signal + self.shared_loading * self.shared_loading + 1.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub n_instances: usize,
    pub positive_rate: f64,
    pub classifiers: Vec<ClassifierSpec>,
    pub seed: u64,
}

impl PoolSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_instances == 0 {
            return Err(Error::InvalidParam("n_instances must be positive".into()));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(Error::InvalidParam(format!(
                "positive_rate must be in (0, 1), got {}",
                self.positive_rate
            )));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Empty("classifier specs"));
        }
        for c in &self.classifiers {
            let ok = c.signal >= 0.0
                && c.signal.is_finite()
                && c.shared_loading.is_finite()
                && c.calib_alpha > 0.0
                && c.calib_alpha.is_finite()
                && c.calib_beta.is_finite()
                && c.bags >= 1;
            if !ok {
                return Err(Error::InvalidParam(format!("invalid classifier spec {:?}", c.name)));
            }
        }
        Ok(())
    }
}

/// Exact posterior of the generator given every column's latent.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesOracle {
    pub positive_rate: f64,
    /// Per column.
    pub signal: Vec<f64>,
    pub shared_loading: Vec<f64>,
    pub calib_alpha: Vec<f64>,
    pub calib_beta: Vec<f64>,
    /// Column-major latents `z`.
    pub latents: Vec<Vec<f64>>,
}

impl BayesOracle {
    pub fn n_columns(&self) -> usize {
        self.signal.len()
    }

    /// `P(y = 1 | z)` for one instance's latent vector, from the likelihood
    /// ratio of `N(±a, b bᵀ + I)`.
    pub fn posterior(&self, z: &[f64]) -> f64 {
        let a = &self.signal;
        let b = &self.shared_loading;
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        let ab = dot(a, b);
        let bb = dot(b, b);
        let quad = dot(a, z) - ab * dot(b, z) / (1.0 + bb);
        let pi = self.positive_rate;
        sigmoid((pi / (1.0 - pi)).ln() + 2.0 * quad)
    }

    pub fn posteriors(&self) -> Vec<f64> {
        let n = self.latents.first().map_or(0, Vec::len);
        let mut z = vec![0.0; self.n_columns()];
        (0..n)
            .map(|i| {
                for (zj, col) in z.iter_mut().zip(&self.latents) {
                    *zj = col[i];
                }
                self.posterior(&z)
            })
            .collect()
    }

    fn scale(&self, j: usize) -> f64 {
        let (a, b) = (self.signal[j], self.shared_loading[j]);
        1.0 / (a * a + b * b + 1.0).sqrt()
    }

    /// Column `j` before miscalibration.
    pub fn calibrated_scores(&self, j: usize) -> Vec<f64> {
        let c = self.scale(j);
        self.latents[j].iter().map(|&z| sigmoid(c * z)).collect()
    }

    /// Population AUC of column `j`: `Φ(a sqrt(2 / (b² + 1)))`.
    pub fn expected_auc(&self, j: usize) -> f64 {
        let (a, b) = (self.signal[j], self.shared_loading[j]);
        let x = a * (2.0 / (b * b + 1.0)).sqrt();
        0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
    }

    /// Population Brier score of column `j` as emitted, by quadrature over
    /// the class-conditional latent distributions.
    pub fn expected_brier(&self, j: usize) -> f64 {
        let (a, b) = (self.signal[j], self.shared_loading[j]);
        let c = self.scale(j);
        let (alpha, beta) = (self.calib_alpha[j], self.calib_beta[j]);
        let s = (b * b + 1.0).sqrt();
        let score = |z: f64| sigmoid(alpha * c * z + beta);
        let pos = gaussian_expectation(a, s, |z| (1.0 - score(z)).powi(2));
        let neg = gaussian_expectation(-a, s, |z| score(z).powi(2));
        let pi = self.positive_rate;
        pi * pos + (1.0 - pi) * neg
    }
}

/// `E[f(Z)]` for `Z ~ N(mean, sd²)` by Simpson's rule over ±10 sd.
fn gaussian_expectation(mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
    const STEPS: usize = 2000;
    let h = 20.0 / STEPS as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let g = |u: f64| norm * (-0.5 * u * u).exp() * f(mean + sd * u);
    let mut total = g(-10.0) + g(10.0);
    for i in 1..STEPS {
        let u = -10.0 + i as f64 * h;
        total += if i % 2 == 1 { 4.0 } else { 2.0 } * g(u);
    }
    total * h / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPool {
    pub spec: PoolSpec,
    pub matrix: PredictionMatrix,
    pub labels: LabelVector,
    pub oracle: BayesOracle,
}

/// Draws a pool. Columns are named `<name>.<bag>` and grouped by name.
pub fn generate(spec: &PoolSpec) -> Result<SyntheticPool> {
    spec.validate()?;
    let n = spec.n_instances;
    let mut label_rng = rng::stream(spec.seed, &[rng::tag("labels")]);
    let labels: Vec<u8> = (0..n).map(|_| u8::from(label_rng.random_bool(spec.positive_rate))).collect();
    let mut shared_rng = rng::stream(spec.seed, &[rng::tag("shared")]);
    let shared: Vec<f64> = (0..n).map(|_| shared_rng.sample(StandardNormal)).collect();

    let mut ids = Vec::new();
    let mut groups = Vec::new();
    let mut columns = Vec::new();
    let mut oracle = BayesOracle {
        positive_rate: spec.positive_rate,
        signal: Vec::new(),
        shared_loading: Vec::new(),
        calib_alpha: Vec::new(),
        calib_beta: Vec::new(),
        latents: Vec::new(),
    };
    for (j, c) in spec.classifiers.iter().enumerate() {
        let scale = c.scale();
        for bag in 0..c.bags {
            let mut noise = rng::stream(spec.seed, &[rng::tag("noise"), j as u64, bag as u64]);
            let latent: Vec<f64> = (0..n)
                .map(|i| {
                    let e: f64 = noise.sample(StandardNormal);
                    c.signal * (2.0 * f64::from(labels[i]) - 1.0) + c.shared_loading * shared[i] + e
                })
                .collect();
            columns.push(
                latent
                    .iter()
                    .map(|&z| sigmoid(c.calib_alpha * scale * z + c.calib_beta))
                    .collect(),
            );
            ids.push(format!("{}.{bag}", c.name));
            groups.push(c.name.clone());
            oracle.signal.push(c.signal);
            oracle.shared_loading.push(c.shared_loading);
            oracle.calib_alpha.push(c.calib_alpha);
            oracle.calib_beta.push(c.calib_beta);
            oracle.latents.push(latent);
        }
    }
    let instance_ids = (0..n).map(|i| format!("i{i}")).collect();
    Ok(SyntheticPool {
        spec: spec.clone(),
        matrix: PredictionMatrix::new(instance_ids, ids, groups, columns)?,
        labels: LabelVector::new(labels)?,
        oracle,
    })
}
