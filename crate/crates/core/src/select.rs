//! Forward ensemble selection over a pool of prediction columns.
//!
//! Greedy selection adds classifiers in order of individual validation AUC.
//! CES seeds the ensemble with the top `init_n` classifiers and then adds,
//! possibly repeatedly, whichever candidate most improves the AUC of the
//! mean-combined ensemble.

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::combine::RunningMean;
use crate::data::{LabelVector, PredictionMatrix};
use crate::error::{Error, Result};
use crate::metrics::{auc, auc_unchecked, brier, diversity_matrix};
use crate::model::{merge_weights, EnsembleModel};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CesParams {
    pub init_n: usize,
    pub max_size: usize,
    pub with_replacement: bool,
    /// Share of the pool evaluated as candidates at each iteration.
    pub candidate_fraction: f64,
    pub seed: u64,
}

impl Default for CesParams {
    fn default() -> Self {
        CesParams {
            init_n: 2,
            max_size: 100,
            with_replacement: true,
            candidate_fraction: 1.0,
            seed: 0,
        }
    }
}

impl CesParams {
    pub fn validate(&self, pool_size: usize) -> Result<()> {
        if pool_size == 0 {
            return Err(Error::Empty("classifier pool"));
        }
        if self.init_n > pool_size {
            return Err(Error::InvalidParam(format!(
                "init_n = {} exceeds pool size {pool_size}",
                self.init_n
            )));
        }
        if self.max_size < self.init_n.max(1) {
            return Err(Error::InvalidParam(format!(
                "max_size = {} must be at least max(init_n, 1) = {}",
                self.max_size,
                self.init_n.max(1)
            )));
        }
        if !(self.candidate_fraction > 0.0 && self.candidate_fraction <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "candidate_fraction must be in (0, 1], got {}",
                self.candidate_fraction
            )));
        }
        Ok(())
    }
}

/// State of the ensemble after one addition.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub chosen: String,
    pub chosen_index: usize,
    /// Multiset size, equal to `iteration`.
    pub ensemble_size: usize,
    pub val_auc: f64,
    /// Mean `q_adjusted` over all pairs of ensemble positions; 0 for a
    /// single member.
    pub mean_diversity: f64,
    pub brier: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionTrajectory {
    pub records: Vec<IterationRecord>,
}

impl SelectionTrajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Position of the first record with the highest validation AUC.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (t, r) in self.records.iter().enumerate() {
            if best.is_none_or(|b| r.val_auc > self.records[b].val_auc) {
                best = Some(t);
            }
        }
        best
    }

    /// Chosen ids of the first `size` iterations.
    pub fn selections(&self, size: usize) -> Vec<String> {
        self.records.iter().take(size).map(|r| r.chosen.clone()).collect()
    }

    /// Weighted-mean ensemble at the validation-optimal iteration.
    pub fn best_model(&self) -> Result<EnsembleModel> {
        let best = self.best_index().ok_or(Error::Empty("selection trajectory"))?;
        weights_from_counts(&self.selections(best + 1))
    }
}

/// Normalised selection counts, ordered by first appearance.
pub fn weights_from_counts<S: AsRef<str>>(selections: &[S]) -> Result<EnsembleModel> {
    if selections.is_empty() {
        return Err(Error::Empty("selection multiset"));
    }
    let total = selections.len() as f64;
    let counts = merge_weights(selections.iter().map(|s| (s.as_ref().to_string(), 1.0)));
    EnsembleModel::weighted_mean(counts.into_iter().map(|(id, c)| (id, c / total)).collect())
}

pub fn individual_aucs(val: &PredictionMatrix, labels: &LabelVector) -> Result<Vec<f64>> {
    (0..val.n_classifiers()).map(|j| auc(val.column(j), labels)).collect()
}

/// Column indices by descending AUC; equal AUCs keep column order.
pub fn rank_by_auc(aucs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..aucs.len()).collect();
    order.sort_by(|&a, &b| aucs[b].total_cmp(&aucs[a]));
    order
}

/// Running ensemble with the statistics recorded per iteration.
struct Ensemble<'a> {
    val: &'a PredictionMatrix,
    labels: &'a LabelVector,
    diversity: Vec<Vec<f64>>,
    mean: RunningMean,
    counts: Vec<usize>,
    pair_sum: f64,
    records: Vec<IterationRecord>,
}

impl<'a> Ensemble<'a> {
    fn new(val: &'a PredictionMatrix, labels: &'a LabelVector) -> Result<Self> {
        check_pool(val, labels)?;
        let m = val.n_classifiers();
        let diversity = if m >= 2 {
            diversity_matrix(val, labels)?
        } else {
            vec![vec![0.0]]
        };
        Ok(Ensemble {
            val,
            labels,
            diversity,
            mean: RunningMean::new(val.n_instances()),
            counts: vec![0; m],
            pair_sum: 0.0,
            records: Vec::new(),
        })
    }

    fn add(&mut self, j: usize) -> Result<()> {
        let size = self.mean.count();
        self.pair_sum += self
            .counts
            .iter()
            .zip(&self.diversity[j])
            .map(|(&c, &d)| c as f64 * d)
            .sum::<f64>();
        self.counts[j] += 1;
        self.mean.push(self.val.column(j))?;
        let current = self.mean.current()?;
        let pairs = (size + 1) * size / 2;
        self.records.push(IterationRecord {
            iteration: size + 1,
            chosen: self.val.classifier_ids()[j].clone(),
            chosen_index: j,
            ensemble_size: size + 1,
            val_auc: auc_unchecked(&current, self.labels.as_slice()),
            mean_diversity: if pairs == 0 { 0.0 } else { self.pair_sum / pairs as f64 },
            brier: brier(&current, self.labels)?,
        });
        Ok(())
    }
}

fn check_pool(val: &PredictionMatrix, labels: &LabelVector) -> Result<()> {
    if val.n_classifiers() == 0 {
        return Err(Error::Empty("classifier pool"));
    }
    if val.n_instances() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} labels for {} validation rows",
            labels.len(),
            val.n_instances()
        )));
    }
    if !labels.has_both_classes() {
        return Err(Error::SingleClass("selection"));
    }
    Ok(())
}

/// Adds the columns in descending order of individual AUC, without
/// replacement, recording the mean-combined ensemble at each size.
pub fn greedy_select(
    val: &PredictionMatrix,
    labels: &LabelVector,
    max_size: usize,
) -> Result<SelectionTrajectory> {
    let mut ensemble = Ensemble::new(val, labels)?;
    if max_size == 0 || max_size > val.n_classifiers() {
        return Err(Error::InvalidParam(format!(
            "max_size = {max_size} outside [1, {}]",
            val.n_classifiers()
        )));
    }
    let order = rank_by_auc(&individual_aucs(val, labels)?);
    for &j in order.iter().take(max_size) {
        ensemble.add(j)?;
    }
    Ok(SelectionTrajectory { records: ensemble.records })
}

/// CES selection. Returns the full trajectory and the weighted mean of the
/// final ensemble. Without replacement, selection stops early once the pool
/// is exhausted.
pub fn ces_select(
    val: &PredictionMatrix,
    labels: &LabelVector,
    params: &CesParams,
) -> Result<(SelectionTrajectory, EnsembleModel)> {
    params.validate(val.n_classifiers())?;
    let mut ensemble = Ensemble::new(val, labels)?;
    let m = val.n_classifiers();
    let order = rank_by_auc(&individual_aucs(val, labels)?);
    for &j in order.iter().take(params.init_n) {
        ensemble.add(j)?;
    }

    let mut rng = rng::stream(params.seed, &[rng::tag("ces-candidates")]);
    while ensemble.mean.count() < params.max_size {
        let mut candidates: Vec<usize> = (0..m)
            .filter(|&j| params.with_replacement || ensemble.counts[j] == 0)
            .collect();
        if candidates.is_empty() {
            break;
        }
        if params.candidate_fraction < 1.0 {
            let take = ((params.candidate_fraction * candidates.len() as f64).ceil() as usize)
                .clamp(1, candidates.len());
            let mut picked: Vec<usize> = sample(&mut rng, candidates.len(), take)
                .into_iter()
                .map(|p| candidates[p])
                .collect();
            picked.sort_unstable();
            candidates = picked;
        }
        let scores = evaluate_candidates(&ensemble.mean, val, labels, &candidates);
        let chosen = argmax_first(&candidates, &scores);
        ensemble.add(chosen)?;
    }

    let trajectory = SelectionTrajectory { records: ensemble.records };
    let model = weights_from_counts(&trajectory.selections(trajectory.len()))?;
    Ok((trajectory, model))
}

/// Validation AUC of the ensemble after adding each candidate.
pub fn evaluate_candidates(
    state: &RunningMean,
    val: &PredictionMatrix,
    labels: &LabelVector,
    candidates: &[usize],
) -> Vec<f64> {
    candidates
        .par_iter()
        .map_init(Vec::new, |buf, &j| {
            state.preview(val.column(j), buf);
            auc_unchecked(buf, labels.as_slice())
        })
        .collect()
}

/// Candidate with the highest score; the first listed wins ties.
fn argmax_first(candidates: &[usize], scores: &[f64]) -> usize {
    let mut best = 0;
    for t in 1..scores.len() {
        if scores[t] > scores[best] {
            best = t;
        }
    }
    candidates[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn labels() -> LabelVector {
        LabelVector::new(vec![1, 1, 1, 1, 0, 0, 0, 0]).unwrap()
    }

    #[test]
    fn greedy_follows_individual_auc() {
        let y = labels();
        // AUCs by pair count: 1.0, 0.75, 0.5625
        let strong = vec![0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1];
        let mid = vec![0.9, 0.8, 0.3, 0.2, 0.7, 0.6, 0.1, 0.05];
        let weak = vec![0.9, 0.2, 0.3, 0.4, 0.8, 0.25, 0.45, 0.1];
        let pool = PredictionMatrix::from_columns(vec![weak, strong, mid]).unwrap();
        let aucs = individual_aucs(&pool, &y).unwrap();
        assert_eq!(aucs, vec![0.5625, 1.0, 0.75]);
        let t = greedy_select(&pool, &y, 3).unwrap();
        let order: Vec<usize> = t.records.iter().map(|r| r.chosen_index).collect();
        assert_eq!(order, vec![1, 2, 0]);
        let one = greedy_select(&pool, &y, 1).unwrap();
        assert_eq!(one.records[0].val_auc, 1.0);
        assert!(greedy_select(&pool, &y, 4).is_err());
    }

    #[test]
    fn identical_columns_tie_to_lowest_index() {
        let y = labels();
        let c = vec![0.9, 0.8, 0.3, 0.2, 0.7, 0.6, 0.1, 0.05];
        let pool = PredictionMatrix::from_columns(vec![c.clone(), c]).unwrap();
        let t = greedy_select(&pool, &y, 2).unwrap();
        assert_eq!(t.records[0].chosen_index, 0);
        let (t, _) = ces_select(&pool, &y, &CesParams { init_n: 0, max_size: 3, ..Default::default() }).unwrap();
        assert!(t.records.iter().all(|r| r.chosen_index == 0));
    }

    #[test]
    fn perfect_beats_anti_perfect() {
        let y = labels();
        let perfect: Vec<f64> = y.iter().map(f64::from).collect();
        let anti: Vec<f64> = y.iter().map(|l| 1.0 - f64::from(l)).collect();
        let pool = PredictionMatrix::from_columns(vec![anti, perfect]).unwrap();
        let params = CesParams { init_n: 0, max_size: 1, ..Default::default() };
        let (t, model) = ces_select(&pool, &y, &params).unwrap();
        assert_eq!(t.records[0].chosen, "c1");
        assert_eq!(t.records[0].val_auc, 1.0);
        assert_eq!(model.members(), vec![("c1".to_string(), 1.0)]);
    }

    #[test]
    fn count_weights() {
        assert_eq!(weights_from_counts(&["A"]).unwrap().members(), vec![("A".to_string(), 1.0)]);
        let m = weights_from_counts(&["A", "A", "B"]).unwrap().members();
        assert_eq!(m, vec![("A".to_string(), 2.0 / 3.0), ("B".to_string(), 1.0 / 3.0)]);
        assert!(weights_from_counts::<&str>(&[]).is_err());
    }

    #[test]
    fn published_count_profile_is_a_valid_weighting() {
        let listed = [("rf", 0.21), ("gbm", 0.27), ("RBFClassifier", 0.05), ("SGD", 0.04), ("VFI", 0.11), ("IBk", 0.13)];
        let listed_total: f64 = listed.iter().map(|(_, w)| w).sum();
        assert!(listed_total <= 1.0);
        let mut members: Vec<(String, f64)> = listed.iter().map(|(n, w)| (n.to_string(), *w)).collect();
        members.push(("other".into(), 1.0 - listed_total));
        assert!(EnsembleModel::weighted_mean(members).is_ok());
    }

    fn pool(seed: u64, m: usize, n: usize) -> (PredictionMatrix, LabelVector) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
        let cols = (0..m)
            .map(|j| {
                let s = 0.05 * (j % 5) as f64;
                y.iter().map(|&l| (s * l as f64 + (1.0 - s) * r.random::<f64>()).clamp(0.0, 1.0)).collect()
            })
            .collect();
        (PredictionMatrix::from_columns(cols).unwrap(), LabelVector::new(y).unwrap())
    }

    #[test]
    fn ces_choices_are_exhaustive_argmax() {
        let (val, y) = pool(3, 10, 90);
        let params = CesParams { max_size: 25, ..Default::default() };
        let (t, model) = ces_select(&val, &y, &params).unwrap();
        assert_eq!(t.len(), 25);
        let mut members: Vec<usize> = Vec::new();
        for (step, r) in t.records.iter().enumerate() {
            if step >= params.init_n {
                let mut best = (usize::MAX, f64::NEG_INFINITY);
                for j in 0..10 {
                    let mut cols = members.clone();
                    cols.push(j);
                    let a = auc(&crate::combine::mean_of_columns(&val, &cols).unwrap(), &y).unwrap();
                    if a > best.1 {
                        best = (j, a);
                    }
                }
                assert_eq!(r.chosen_index, best.0);
                assert_eq!(r.val_auc, best.1);
            }
            members.push(r.chosen_index);
        }
        let weights: f64 = model.members().iter().map(|(_, w)| w).sum();
        assert!((weights - 1.0).abs() < 1e-12);
        let final_mean = crate::combine::mean_of_columns(&val, &members).unwrap();
        for (a, b) in model.predict(&val).unwrap().iter().zip(&final_mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_and_ces_agree_on_first_pick() {
        for seed in 0..5 {
            let (val, y) = pool(seed, 8, 60);
            let g = greedy_select(&val, &y, 1).unwrap();
            let (c, _) = ces_select(&val, &y, &CesParams { init_n: 0, max_size: 1, ..Default::default() }).unwrap();
            assert_eq!(g.records[0], c.records[0]);
        }
    }

    #[test]
    fn without_replacement_stops_when_exhausted() {
        let (val, y) = pool(4, 5, 60);
        let params = CesParams { with_replacement: false, max_size: 50, ..Default::default() };
        let (t, _) = ces_select(&val, &y, &params).unwrap();
        assert_eq!(t.len(), 5);
        let mut seen: Vec<usize> = t.records.iter().map(|r| r.chosen_index).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn candidate_sampling_is_seeded() {
        let (val, y) = pool(5, 12, 60);
        let params = CesParams { candidate_fraction: 0.3, max_size: 20, seed: 17, ..Default::default() };
        let (a, _) = ces_select(&val, &y, &params).unwrap();
        let (b, _) = ces_select(&val, &y, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diversity_of_the_multiset() {
        let (val, y) = pool(6, 4, 60);
        let d = diversity_matrix(&val, &y).unwrap();
        let t = greedy_select(&val, &y, 3).unwrap();
        let ids: Vec<usize> = t.records.iter().map(|r| r.chosen_index).collect();
        assert_eq!(t.records[0].mean_diversity, 0.0);
        let expected = (d[ids[0]][ids[1]] + d[ids[0]][ids[2]] + d[ids[1]][ids[2]]) / 3.0;
        assert!((t.records[2].mean_diversity - expected).abs() < 1e-12);
    }

    #[test]
    fn params_are_checked() {
        let (val, y) = pool(7, 3, 30);
        for bad in [
            CesParams { init_n: 4, ..Default::default() },
            CesParams { init_n: 2, max_size: 1, ..Default::default() },
            CesParams { candidate_fraction: 0.0, ..Default::default() },
        ] {
            assert!(matches!(ces_select(&val, &y, &bad), Err(Error::InvalidParam(_))));
        }
    }

    #[test]
    fn best_index_takes_first_maximum() {
        let rec = |a: f64| IterationRecord {
            iteration: 1,
            chosen: "x".into(),
            chosen_index: 0,
            ensemble_size: 1,
            val_auc: a,
            mean_diversity: 0.0,
            brier: 0.0,
        };
        let t = SelectionTrajectory { records: vec![rec(0.6), rec(0.8), rec(0.8), rec(0.7)] };
        assert_eq!(t.best_index(), Some(1));
    }
}
