//! Performance, calibration and diversity measures.

use rayon::prelude::*;

use crate::data::{LabelVector, PredictionMatrix};
use crate::error::{Error, Result};

fn check_lengths(scores: &[f64], labels: &LabelVector) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Area under the ROC curve, i.e. the Mann–Whitney probability that a random
/// positive outscores a random negative, ties counting one half.
///
/// Computed from midranks in `O(n log n)`.
pub fn auc(scores: &[f64], labels: &LabelVector) -> Result<f64> {
    check_lengths(scores, labels)?;
    if !labels.has_both_classes() {
        return Err(Error::SingleClass("AUC"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidParam(format!("non-finite score at index {i}")));
    }
    Ok(auc_unchecked(scores, labels.as_slice()))
}

/// [`auc`] without input validation; labels must contain both classes.
pub(crate) fn auc_unchecked(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut positives = 0usize;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1..=end share their mean
        let midrank = (start + 1 + end) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        rank_sum += midrank * tied_pos as f64;
        positives += tied_pos;
        start = end;
    }
    let negatives = n - positives;
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    u / (p * negatives as f64)
}

/// Mean squared difference between probabilities and outcomes.
pub fn brier(scores: &[f64], labels: &LabelVector) -> Result<f64> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::Empty("Brier score of zero instances"));
    }
    let total: f64 = scores
        .iter()
        .zip(labels.iter())
        .map(|(&f, o)| (f - f64::from(o)).powi(2))
        .sum();
    Ok(total / scores.len() as f64)
}

/// 1 where the score is strictly greater than `tau`, else 0.
pub fn threshold_labels(scores: &[f64], tau: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > tau)).collect()
}

/// Joint correctness counts of two classifiers: `n10` counts instances the
/// first classifier gets right and the second gets wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContingencyTable {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ContingencyTable {
    /// Builds the table from thresholded predictions at 0.5.
    pub fn from_predictions(pred_i: &[f64], pred_k: &[f64], labels: &[u8]) -> ContingencyTable {
        let mut t = ContingencyTable::default();
        for ((&a, &b), &y) in pred_i.iter().zip(pred_k).zip(labels) {
            let ci = u8::from(a > 0.5) == y;
            let ck = u8::from(b > 0.5) == y;
            match (ci, ck) {
                (true, true) => t.n11 += 1,
                (true, false) => t.n10 += 1,
                (false, true) => t.n01 += 1,
                (false, false) => t.n00 += 1,
            }
        }
        t
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// Yule's Q. A zero denominator yields `(0.0, true)`.
    pub fn yule_q(&self) -> (f64, bool) {
        let agree = self.n11 as f64 * self.n00 as f64;
        let disagree = self.n01 as f64 * self.n10 as f64;
        let denom = agree + disagree;
        if denom == 0.0 {
            (0.0, true)
        } else {
            ((agree - disagree) / denom, false)
        }
    }

    /// Cohen's κ on the correct/incorrect indicators. When chance agreement
    /// is 1 (both classifiers constant in correctness) κ is reported as 0 and
    /// flagged degenerate.
    pub fn cohen_kappa(&self) -> (f64, bool) {
        let n = self.total() as f64;
        if n == 0.0 {
            return (0.0, true);
        }
        let p_o = (self.n11 + self.n00) as f64 / n;
        let p_i = (self.n11 + self.n10) as f64 / n;
        let p_k = (self.n11 + self.n01) as f64 / n;
        let p_e = p_i * p_k + (1.0 - p_i) * (1.0 - p_k);
        if p_e >= 1.0 {
            (0.0, true)
        } else {
            ((p_o - p_e) / (1.0 - p_e), false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityStats {
    /// Yule's Q in [-1, 1].
    pub q: f64,
    /// 1 - |Q|: 0 means no diversity, 1 maximal diversity.
    pub q_adjusted: f64,
    pub kappa: f64,
    /// Q's denominator vanished and Q was set to 0.
    pub degenerate: bool,
    pub kappa_degenerate: bool,
    pub table: ContingencyTable,
}

impl DiversityStats {
    pub fn from_table(table: ContingencyTable) -> DiversityStats {
        let (q, degenerate) = table.yule_q();
        let (kappa, kappa_degenerate) = table.cohen_kappa();
        DiversityStats {
            q,
            q_adjusted: 1.0 - q.abs(),
            kappa,
            degenerate,
            kappa_degenerate,
            table,
        }
    }
}

pub fn pair_diversity(pred_i: &[f64], pred_k: &[f64], labels: &LabelVector) -> Result<DiversityStats> {
    if pred_i.len() != pred_k.len() || pred_i.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "prediction lengths {} and {} with {} labels",
            pred_i.len(),
            pred_k.len(),
            labels.len()
        )));
    }
    if pred_i.is_empty() {
        return Err(Error::Empty("diversity of zero instances"));
    }
    Ok(DiversityStats::from_table(ContingencyTable::from_predictions(
        pred_i,
        pred_k,
        labels.as_slice(),
    )))
}

/// Symmetric matrix of pairwise `q_adjusted` with a zero diagonal.
pub fn diversity_matrix(matrix: &PredictionMatrix, labels: &LabelVector) -> Result<Vec<Vec<f64>>> {
    let m = matrix.n_classifiers();
    if m < 2 {
        return Err(Error::InvalidParam(format!(
            "diversity needs at least 2 classifiers, got {m}"
        )));
    }
    if labels.len() != matrix.n_instances() {
        return Err(Error::Dimension(format!(
            "{} labels for {} instances",
            labels.len(),
            matrix.n_instances()
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|j| (j + 1..m).map(move |l| (j, l))).collect();
    let values = pairs
        .par_iter()
        .map(|&(j, l)| {
            pair_diversity(matrix.column(j), matrix.column(l), labels)
                .map(|d| d.q_adjusted)
                .map_err(|e| Error::Pair {
                    a: matrix.classifier_ids()[j].clone(),
                    b: matrix.classifier_ids()[l].clone(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut out = vec![vec![0.0; m]; m];
    for (&(j, l), v) in pairs.iter().zip(values) {
        out[j][l] = v;
        out[l][j] = v;
    }
    Ok(out)
}

/// Sample Pearson correlation; `None` when either column has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// `1 - |ρ|`; a zero-variance column is at distance 1 from everything.
pub fn correlation_distance(col_i: &[f64], col_j: &[f64]) -> Result<f64> {
    if col_i.len() != col_j.len() {
        return Err(Error::Dimension(format!(
            "columns of length {} and {}",
            col_i.len(),
            col_j.len()
        )));
    }
    if col_i.len() < 2 {
        return Ok(1.0);
    }
    Ok(pearson(col_i, col_j).map_or(1.0, |r| 1.0 - r.abs()))
}

/// Pairwise correlation distances between the columns of `matrix`, zero on
/// the diagonal.
pub fn correlation_distance_matrix(matrix: &PredictionMatrix) -> Vec<Vec<f64>> {
    let m = matrix.n_classifiers();
    let mut out = vec![vec![0.0; m]; m];
    for j in 0..m {
        for l in j + 1..m {
            // columns of one matrix always share a length
            let d = correlation_distance(matrix.column(j), matrix.column(l)).unwrap_or(1.0);
            out[j][l] = d;
            out[l][j] = d;
        }
    }
    out
}

/// Per-classifier mean diversity against the rest of the pool, with its
/// individual AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierProfile {
    pub classifier_id: String,
    pub mean_diversity: f64,
    pub auc: f64,
}

pub fn mean_pairwise_profile(
    matrix: &PredictionMatrix,
    labels: &LabelVector,
) -> Result<Vec<ClassifierProfile>> {
    let div = diversity_matrix(matrix, labels)?;
    let m = matrix.n_classifiers();
    (0..m)
        .map(|j| {
            Ok(ClassifierProfile {
                classifier_id: matrix.classifier_ids()[j].clone(),
                mean_diversity: div[j].iter().sum::<f64>() / (m - 1) as f64,
                auc: auc(matrix.column(j), labels)?,
            })
        })
        .collect()
}

/// Sorts profiles by ascending mean diversity (ties keep input order).
pub fn sort_by_diversity(profiles: &mut [ClassifierProfile]) {
    profiles.sort_by(|a, b| a.mean_diversity.total_cmp(&b.mean_diversity));
}
