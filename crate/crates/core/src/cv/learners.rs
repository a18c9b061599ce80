//! Native base learners used by the cross-validation pipeline.
//!
//! Each learner is registered under a name and produces a fitted
//! [`Classifier`] from row-major features and 0/1 labels.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::data::LabelVector;
use crate::error::{Error, Result};
use crate::stack::{fit_logistic, predict_logistic, LogisticConfig, LogisticModel};

pub trait Classifier: Send + Sync {
    /// Probability of the positive class for each row.
    fn predict_proba(&self, rows: &[&[f64]]) -> Vec<f64>;
}

pub trait Learner: Send + Sync {
    fn name(&self) -> &str;
    fn fit(&self, rows: &[&[f64]], labels: &[u8]) -> Result<Box<dyn Classifier>>;
}

/// Learners by name.
#[derive(Clone, Default)]
pub struct LearnerRegistry {
    learners: BTreeMap<String, Arc<dyn Learner>>,
}

impl LearnerRegistry {
    pub fn empty() -> LearnerRegistry {
        LearnerRegistry::default()
    }

    /// `logistic`, `tree`, `knn` and `naive_bayes` with default settings.
    pub fn builtin() -> LearnerRegistry {
        let mut r = LearnerRegistry::empty();
        r.register(Arc::new(LogisticLearner::default()));
        r.register(Arc::new(TreeLearner::default()));
        r.register(Arc::new(KnnLearner::default()));
        r.register(Arc::new(NaiveBayesLearner::default()));
        r
    }

    pub fn register(&mut self, learner: Arc<dyn Learner>) {
        self.learners.insert(learner.name().to_string(), learner);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Learner>> {
        self.learners.get(name).cloned().ok_or_else(|| Error::UnknownStrategy {
            kind: "learner",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.learners.keys().cloned().collect()
    }

    /// Resolves a list of names, keeping its order.
    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Arc<dyn Learner>>> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }
}

fn check_training(rows: &[&[f64]], labels: &[u8], learner: &str) -> Result<usize> {
    let fail = |message: String| Error::Learner { learner: learner.to_string(), message };
    if rows.len() != labels.len() {
        return Err(fail(format!("{} rows for {} labels", rows.len(), labels.len())));
    }
    if rows.is_empty() {
        return Err(fail("no training rows".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(fail("ragged feature rows".into()));
    }
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(fail("training labels contain a single class".into()));
    }
    Ok(width)
}

/// Per-feature centring and scaling learned from training rows. Constant
/// features keep unit scale.
#[derive(Debug, Clone)]
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

fn moments(rows: &[&[f64]], width: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; width];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; width];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    (mean, var)
}

impl Standardizer {
    fn fit(rows: &[&[f64]], width: usize) -> Standardizer {
        let (mean, var) = moments(rows, width);
        let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Column-major standardized copy of `rows`.
    fn columns(&self, rows: &[&[f64]]) -> Vec<Vec<f64>> {
        let mut cols = vec![Vec::with_capacity(rows.len()); self.mean.len()];
        for r in rows {
            for (c, v) in cols.iter_mut().zip(self.apply(r)) {
                c.push(v);
            }
        }
        cols
    }
}

/// Ridge logistic regression on standardized features.
#[derive(Debug, Clone)]
pub struct LogisticLearner {
    pub config: LogisticConfig,
}

impl Default for LogisticLearner {
    fn default() -> Self {
        LogisticLearner {
            config: LogisticConfig { lambda: 1.0, ..LogisticConfig::default() },
        }
    }
}

struct LogisticClassifier {
    standardizer: Standardizer,
    model: LogisticModel,
}

impl Classifier for LogisticClassifier {
    fn predict_proba(&self, rows: &[&[f64]]) -> Vec<f64> {
        predict_logistic(&self.model, &self.standardizer.columns(rows)).expect("width fixed at fit time")
    }
}

impl Learner for LogisticLearner {
    fn name(&self) -> &str {
        "logistic"
    }

    fn fit(&self, rows: &[&[f64]], labels: &[u8]) -> Result<Box<dyn Classifier>> {
        let width = check_training(rows, labels, self.name())?;
        let standardizer = Standardizer::fit(rows, width);
        let y = LabelVector::new(labels.to_vec())?;
        let model = fit_logistic(&standardizer.columns(rows), &y, &self.config)?;
        Ok(Box::new(LogisticClassifier { standardizer, model }))
    }
}

/// CART with Gini impurity. Leaves predict the Laplace-smoothed positive
/// rate `(positives + 1) / (count + 2)`.
#[derive(Debug, Clone)]
pub struct TreeLearner {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeLearner {
    fn default() -> Self {
        TreeLearner { max_depth: 5, min_leaf: 2 }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

impl Node {
    fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Node::Leaf(p) => *p,
            Node::Split { feature, threshold, left, right } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

impl TreeLearner {
    fn grow(&self, rows: &[&[f64]], labels: &[u8], idx: &mut [usize], depth: usize, width: usize) -> Node {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| labels[i] == 1).count();
        let leaf = Node::Leaf((pos as f64 + 1.0) / (n as f64 + 2.0));
        if depth >= self.max_depth || pos == 0 || pos == n || n < 2 * self.min_leaf {
            return leaf;
        }
        let parent = n as f64 * gini(pos as f64, n as f64);
        // (impurity, feature, threshold)
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..width {
            idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0usize;
            for split in 1..n {
                left_pos += usize::from(labels[idx[split - 1]] == 1);
                let (lo, hi) = (rows[idx[split - 1]][f], rows[idx[split]][f]);
                if lo == hi || split < self.min_leaf || n - split < self.min_leaf {
                    continue;
                }
                let (nl, nr) = (split as f64, (n - split) as f64);
                let impurity = nl * gini(left_pos as f64, nl) + nr * gini((pos - left_pos) as f64, nr);
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    best = Some((impurity, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        match best {
            Some((impurity, feature, threshold)) if impurity < parent - 1e-12 => {
                let (mut left, mut right): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| rows[i][feature] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.grow(rows, labels, &mut left, depth + 1, width)),
                    right: Box::new(self.grow(rows, labels, &mut right, depth + 1, width)),
                }
            }
            _ => leaf,
        }
    }
}

struct TreeClassifier {
    root: Node,
}

impl Classifier for TreeClassifier {
    fn predict_proba(&self, rows: &[&[f64]]) -> Vec<f64> {
        rows.iter().map(|r| self.root.predict(r)).collect()
    }
}

impl Learner for TreeLearner {
    fn name(&self) -> &str {
        "tree"
    }

    fn fit(&self, rows: &[&[f64]], labels: &[u8]) -> Result<Box<dyn Classifier>> {
        let width = check_training(rows, labels, self.name())?;
        if self.min_leaf == 0 {
            return Err(Error::InvalidParam("min_leaf must be at least 1".into()));
        }
        let mut idx: Vec<usize> = (0..rows.len()).collect();
        let root = self.grow(rows, labels, &mut idx, 0, width);
        Ok(Box::new(TreeClassifier { root }))
    }
}

/// Distance-weighted k-nearest neighbours on standardized features; each
/// neighbour votes with weight `1 / (distance + 1e-9)`.
#[derive(Debug, Clone)]
pub struct KnnLearner {
    pub k: usize,
}

impl Default for KnnLearner {
    fn default() -> Self {
        KnnLearner { k: 5 }
    }
}

struct KnnClassifier {
    k: usize,
    standardizer: Standardizer,
    points: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl Classifier for KnnClassifier {
    fn predict_proba(&self, rows: &[&[f64]]) -> Vec<f64> {
        let k = self.k.min(self.points.len());
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.points.len());
        rows.iter()
            .map(|r| {
                let q = self.standardizer.apply(r);
                dist.clear();
                dist.extend(self.points.iter().enumerate().map(|(i, p)| {
                    let d2: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
                    (d2.sqrt(), i)
                }));
                dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let (mut num, mut den) = (0.0, 0.0);
                for &(d, i) in &dist[..k] {
                    let w = 1.0 / (d + 1e-9);
                    num += w * f64::from(self.labels[i]);
                    den += w;
                }
                num / den
            })
            .collect()
    }
}

impl Learner for KnnLearner {
    fn name(&self) -> &str {
        "knn"
    }

    fn fit(&self, rows: &[&[f64]], labels: &[u8]) -> Result<Box<dyn Classifier>> {
        let width = check_training(rows, labels, self.name())?;
        if self.k == 0 {
            return Err(Error::InvalidParam("k must be at least 1".into()));
        }
        let standardizer = Standardizer::fit(rows, width);
        let points = rows.iter().map(|r| standardizer.apply(r)).collect();
        Ok(Box::new(KnnClassifier {
            k: self.k,
            standardizer,
            points,
            labels: labels.to_vec(),
        }))
    }
}

/// Gaussian naive Bayes. Every class variance is inflated by
/// `var_smoothing` times the largest feature variance.
#[derive(Debug, Clone)]
pub struct NaiveBayesLearner {
    pub var_smoothing: f64,
}

impl Default for NaiveBayesLearner {
    fn default() -> Self {
        NaiveBayesLearner { var_smoothing: 1e-9 }
    }
}

struct NaiveBayesClassifier {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl NaiveBayesClassifier {
    fn log_likelihood(&self, class: usize, row: &[f64]) -> f64 {
        self.mean[class]
            .iter()
            .zip(&self.var[class])
            .zip(row)
            .map(|((m, v), x)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
            .sum::<f64>()
            + self.log_prior[class]
    }
}

impl Classifier for NaiveBayesClassifier {
    fn predict_proba(&self, rows: &[&[f64]]) -> Vec<f64> {
        rows.iter()
            .map(|r| crate::stack::sigmoid(self.log_likelihood(1, r) - self.log_likelihood(0, r)))
            .collect()
    }
}

impl Learner for NaiveBayesLearner {
    fn name(&self) -> &str {
        "naive_bayes"
    }

    fn fit(&self, rows: &[&[f64]], labels: &[u8]) -> Result<Box<dyn Classifier>> {
        let width = check_training(rows, labels, self.name())?;
        let max_var = moments(rows, width).1.into_iter().fold(0.0, f64::max);
        let epsilon = (self.var_smoothing * max_var).max(1e-12);
        let mut mean = [vec![0.0; width], vec![0.0; width]];
        let mut var = [vec![0.0; width], vec![0.0; width]];
        let mut count = [0.0f64; 2];
        for (r, &y) in rows.iter().zip(labels) {
            count[y as usize] += 1.0;
            for (m, v) in mean[y as usize].iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        for c in 0..2 {
            for m in &mut mean[c] {
                *m /= count[c];
            }
        }
        for (r, &y) in rows.iter().zip(labels) {
            let c = y as usize;
            for ((s, v), m) in var[c].iter_mut().zip(r.iter()).zip(&mean[c]) {
                *s += (v - m).powi(2);
            }
        }
        for c in 0..2 {
            for s in &mut var[c] {
                *s = *s / count[c] + epsilon;
            }
        }
        let total = count[0] + count[1];
        Ok(Box::new(NaiveBayesClassifier {
            log_prior: [(count[0] / total).ln(), (count[1] / total).ln()],
            mean,
            var,
        }))
    }
}
