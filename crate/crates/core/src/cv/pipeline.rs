//! End-to-end generation of validation and test prediction matrices.
//!
//! For outer fold `f`, learner `l` and bag `b`, the test column comes from a
//! model trained on the fold's balanced bag `b`, and the validation column
//! assembles, for every training row, the prediction of the model trained on
//! bag `b` of the nested fold that held the row out.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use super::learners::Learner;
use super::plan::FoldPlan;
use crate::data::{Dataset, LabelVector, PredictionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldData {
    pub fold: usize,
    pub validation: PredictionMatrix,
    pub validation_labels: LabelVector,
    pub test: PredictionMatrix,
    pub test_labels: LabelVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub folds: Vec<FoldData>,
    /// Surviving columns, `<learner>.<bag>`.
    pub classifier_ids: Vec<String>,
    /// Bag group (learner name) of each surviving column.
    pub groups: Vec<String>,
    pub dropped: Vec<String>,
}

impl PipelineOutput {
    /// Test predictions of every fold stacked in fold order.
    pub fn pooled_test(&self) -> Result<(PredictionMatrix, LabelVector)> {
        let first = self.folds.first().ok_or(Error::Empty("pipeline folds"))?;
        let m = first.test.n_classifiers();
        let mut ids = Vec::new();
        let mut columns = vec![Vec::new(); m];
        let mut labels = Vec::new();
        for fold in &self.folds {
            ids.extend(fold.test.instance_ids().iter().cloned());
            for (c, j) in columns.iter_mut().zip(0..m) {
                c.extend_from_slice(fold.test.column(j));
            }
            labels.extend(fold.test_labels.iter());
        }
        Ok((
            PredictionMatrix::new(ids, first.test.classifier_ids().to_vec(), first.test.groups().to_vec(), columns)?,
            LabelVector::new(labels)?,
        ))
    }
}

fn rows_of<'a>(data: &'a Dataset, idx: &[usize]) -> Vec<&'a [f64]> {
    idx.iter().map(|&i| data.rows[i].as_slice()).collect()
}

fn labels_of(labels: &LabelVector, idx: &[usize]) -> Vec<u8> {
    idx.iter().map(|&i| labels.get(i)).collect()
}

fn check_scores(scores: &[f64], learner: &str) -> Result<()> {
    match scores.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(Error::Learner {
            learner: learner.to_string(),
            message: format!("produced probability {p} outside [0, 1]"),
        }),
        None => Ok(()),
    }
}

/// Test and validation columns for one (fold, learner, bag).
fn column_task(
    data: &Dataset,
    labels: &LabelVector,
    plan: &FoldPlan,
    fold: usize,
    learner: &dyn Learner,
    bag: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let outer = &plan.folds[fold];
    let sample = &outer.bags[bag].balanced;
    let model = learner.fit(&rows_of(data, sample), &labels_of(labels, sample))?;
    let test = model.predict_proba(&rows_of(data, &outer.test));
    check_scores(&test, learner.name())?;

    let mut validation = vec![f64::NAN; outer.train.len()];
    for nested in &outer.nested {
        let sample = &nested.bags[bag].balanced;
        let model = learner.fit(&rows_of(data, sample), &labels_of(labels, sample))?;
        let scores = model.predict_proba(&rows_of(data, &nested.held_out));
        check_scores(&scores, learner.name())?;
        for (&i, s) in nested.held_out.iter().zip(scores) {
            let pos = outer.train.binary_search(&i).expect("held-out rows come from the training split");
            validation[pos] = s;
        }
    }
    if validation.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParam(format!("fold {fold}: nested folds leave training rows unpredicted")));
    }
    Ok((test, validation))
}

/// Trains every learner on every bag of every fold. A column whose learner
/// fails in any fold is dropped from all folds with a warning.
pub fn run_pipeline(
    data: &Dataset,
    labels: &LabelVector,
    learners: &[Arc<dyn Learner>],
    plan: &FoldPlan,
) -> Result<PipelineOutput> {
    if data.rows.len() != labels.len() || labels.len() != plan.n_instances {
        return Err(Error::Dimension(format!(
            "dataset has {} rows, labels {}, fold plan {}",
            data.rows.len(),
            labels.len(),
            plan.n_instances
        )));
    }
    if learners.is_empty() {
        return Err(Error::Empty("learner list"));
    }
    let mut names = HashSet::new();
    if let Some(l) = learners.iter().find(|l| !names.insert(l.name())) {
        return Err(Error::DuplicateId(l.name().to_string()));
    }

    let bags = plan.bags_per_split;
    let tasks: Vec<(usize, usize, usize)> = (0..plan.folds.len())
        .flat_map(|f| (0..learners.len()).flat_map(move |l| (0..bags).map(move |b| (f, l, b))))
        .collect();
    let results: Vec<Result<(Vec<f64>, Vec<f64>)>> = tasks
        .par_iter()
        .map(|&(f, l, b)| column_task(data, labels, plan, f, learners[l].as_ref(), b))
        .collect();

    let column_id = |l: usize, b: usize| format!("{}.{b}", learners[l].name());
    let mut failed = vec![false; learners.len() * bags];
    for (&(f, l, b), r) in tasks.iter().zip(&results) {
        if let Err(e) = r {
            if !failed[l * bags + b] {
                log::warn!("dropping column {} (fold {f}): {e}", column_id(l, b));
            }
            failed[l * bags + b] = true;
        }
    }
    let kept: Vec<(usize, usize)> = (0..learners.len())
        .flat_map(|l| (0..bags).map(move |b| (l, b)))
        .filter(|&(l, b)| !failed[l * bags + b])
        .collect();
    if kept.is_empty() {
        return Err(Error::Learner {
            learner: "all".into(),
            message: "every column failed to train".into(),
        });
    }
    let classifier_ids: Vec<String> = kept.iter().map(|&(l, b)| column_id(l, b)).collect();
    let groups: Vec<String> = kept.iter().map(|&(l, _)| learners[l].name().to_string()).collect();
    let dropped = (0..learners.len())
        .flat_map(|l| (0..bags).map(move |b| (l, b)))
        .filter(|&(l, b)| failed[l * bags + b])
        .map(|(l, b)| column_id(l, b))
        .collect();

    let mut results: Vec<Option<(Vec<f64>, Vec<f64>)>> = results.into_iter().map(|r| r.ok()).collect();
    let mut folds = Vec::with_capacity(plan.folds.len());
    for (f, outer) in plan.folds.iter().enumerate() {
        let mut test_cols = Vec::with_capacity(kept.len());
        let mut val_cols = Vec::with_capacity(kept.len());
        for &(l, b) in &kept {
            let task = (f * learners.len() + l) * bags + b;
            let (test, val) = results[task].take().expect("kept columns succeeded in every fold");
            test_cols.push(test);
            val_cols.push(val);
        }
        let ids = |idx: &[usize]| idx.iter().map(|&i| data.instance_ids[i].clone()).collect::<Vec<_>>();
        folds.push(FoldData {
            fold: f,
            validation: PredictionMatrix::new(ids(&outer.train), classifier_ids.clone(), groups.clone(), val_cols)?,
            validation_labels: labels.select(&outer.train),
            test: PredictionMatrix::new(ids(&outer.test), classifier_ids.clone(), groups.clone(), test_cols)?,
            test_labels: labels.select(&outer.test),
        });
    }
    Ok(PipelineOutput { folds, classifier_ids, groups, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::{make_fold_plan, Classifier, LearnerRegistry};
    use crate::metrics::auc;

    fn perfect_feature(n: usize) -> (Dataset, LabelVector) {
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| vec![f64::from(l), ((i * 7919) % 101) as f64 / 101.0])
            .collect();
        let data = Dataset::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            vec!["f1".into(), "f2".into()],
            rows,
            labels.iter().map(|&l| Some(l)).collect(),
        )
        .unwrap();
        (data, LabelVector::new(labels).unwrap())
    }

    #[test]
    fn perfect_feature_gives_perfect_columns() {
        let (data, y) = perfect_feature(120);
        let plan = make_fold_plan(&y, 4, 3, 2, 5).unwrap();
        let learners = LearnerRegistry::builtin().resolve(&["logistic", "tree", "knn", "naive_bayes"]).unwrap();
        let out = run_pipeline(&data, &y, &learners, &plan).unwrap();
        assert_eq!(out.classifier_ids.len(), 8);
        assert_eq!(out.classifier_ids[0], "logistic.0");
        assert_eq!(out.groups[7], "naive_bayes");
        let (pooled, pooled_y) = out.pooled_test().unwrap();
        assert_eq!(pooled.n_instances(), 120);
        for j in 0..pooled.n_classifiers() {
            assert_eq!(auc(pooled.column(j), &pooled_y).unwrap(), 1.0, "{}", pooled.classifier_ids()[j]);
        }
        for fold in &out.folds {
            let test: HashSet<&String> = fold.test.instance_ids().iter().collect();
            assert!(fold.validation.instance_ids().iter().all(|id| !test.contains(id)));
            assert_eq!(fold.validation.n_instances() + fold.test.n_instances(), 120);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let (data, y) = perfect_feature(60);
        let plan = make_fold_plan(&y, 3, 2, 2, 9).unwrap();
        let learners = LearnerRegistry::builtin().resolve(&["tree", "knn"]).unwrap();
        assert_eq!(
            run_pipeline(&data, &y, &learners, &plan).unwrap(),
            run_pipeline(&data, &y, &learners, &plan).unwrap()
        );
    }

    struct Broken;
    impl Learner for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn fit(&self, _: &[&[f64]], _: &[u8]) -> Result<Box<dyn Classifier>> {
            Err(Error::Learner { learner: "broken".into(), message: "always fails".into() })
        }
    }

    #[test]
    fn failing_learner_is_dropped() {
        let (data, y) = perfect_feature(60);
        let plan = make_fold_plan(&y, 3, 2, 2, 9).unwrap();
        let mut learners = LearnerRegistry::builtin().resolve(&["tree"]).unwrap();
        learners.push(Arc::new(Broken));
        let out = run_pipeline(&data, &y, &learners, &plan).unwrap();
        assert_eq!(out.classifier_ids, vec!["tree.0", "tree.1"]);
        assert_eq!(out.dropped, vec!["broken.0", "broken.1"]);
        assert!(run_pipeline(&data, &y, &[Arc::new(Broken) as Arc<dyn Learner>], &plan).is_err());
    }
}
