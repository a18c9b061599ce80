//! Ensemble construction methods behind a common trait, registered by name.
//!
//! A method is fitted on one fold's validation predictions and applied to
//! that fold's test predictions; evaluation pools the test scores of every
//! fold into a single AUC and Brier score.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use crate::cluster::{fit_with_assignment, sweep_k, ClusterMode, DistanceKind, SweepResult};
use crate::combine::bag_aggregate;
use crate::cv::PipelineOutput;
use crate::data::{LabelVector, PredictionMatrix};
use crate::error::{Error, Result};
use crate::metrics::{auc, brier};
use crate::model::{merge_weights, EnsembleModel};
use crate::rng;
use crate::select::{ces_select, greedy_select, individual_aucs, CesParams, SelectionTrajectory};
use crate::stack::{stack_aggregated, stack_all, subsample_rows, LogisticConfig};

/// Built-in methods in reporting order.
pub const BUILTIN_METHODS: [&str; 8] = [
    "best_base",
    "mean",
    "greedy",
    "ces",
    "stack_all",
    "stack_aggregated",
    "intra_cluster",
    "inter_cluster",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MethodParams {
    pub logistic: LogisticConfig,
    pub ces: CesParams,
    /// Greedy budget; the whole pool when `None`.
    pub greedy_max_size: Option<usize>,
    /// Fixed cluster count; swept over `1..=M` when `None`.
    pub cluster_k: Option<usize>,
    pub cluster_distance: DistanceKind,
    /// Share of validation rows used to fit stacking models.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            logistic: LogisticConfig::default(),
            ces: CesParams::default(),
            greedy_max_size: None,
            cluster_k: None,
            cluster_distance: DistanceKind::Pearson,
            val_fraction: 1.0,
            seed: 0,
        }
    }
}

impl MethodParams {
    /// Copy with every seed re-derived for fold `fold`.
    pub fn for_fold(&self, fold: usize) -> MethodParams {
        let seed = rng::derive_seed(self.seed, &[rng::tag("fold"), fold as u64]);
        let mut p = self.clone();
        p.seed = seed;
        p.ces.seed = rng::derive_seed(seed, &[rng::tag("ces")]);
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub model: EnsembleModel,
    pub trajectory: Option<SelectionTrajectory>,
    pub sweep: Option<SweepResult>,
    /// Selection multiset size, cluster count, or number of inputs.
    pub ensemble_size: usize,
}

impl Fitted {
    fn plain(model: EnsembleModel) -> Fitted {
        let ensemble_size = model.members().len();
        Fitted { model, trajectory: None, sweep: None, ensemble_size }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: String,
    pub dataset: String,
    pub test_auc: f64,
    pub test_brier: f64,
    /// One per fold, for selection methods.
    pub trajectories: Vec<SelectionTrajectory>,
    /// Member weights averaged over folds.
    pub weights: Vec<(String, f64)>,
    pub ensemble_sizes: Vec<usize>,
    pub wall_time: f64,
}

impl MethodReport {
    pub fn mean_ensemble_size(&self) -> f64 {
        if self.ensemble_sizes.is_empty() {
            return 0.0;
        }
        self.ensemble_sizes.iter().sum::<usize>() as f64 / self.ensemble_sizes.len() as f64
    }
}

pub trait EnsembleMethod: Send + Sync {
    fn name(&self) -> &str;

    /// Fits on validation predictions only.
    fn fit(&self, val: &PredictionMatrix, labels: &LabelVector, params: &MethodParams) -> Result<Fitted>;

    /// Fits on each fold's validation data, predicts its test data and
    /// scores the pooled test predictions.
    fn evaluate(&self, output: &PipelineOutput, params: &MethodParams, dataset: &str) -> Result<MethodReport> {
        let start = Instant::now();
        let fitted = output
            .folds
            .iter()
            .enumerate()
            .map(|(f, fold)| self.fit(&fold.validation, &fold.validation_labels, &params.for_fold(f)))
            .collect::<Result<Vec<_>>>()?;
        // test labels are read only once every fold's combiner is fixed
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        let mut trajectories = Vec::new();
        let mut weights = Vec::new();
        let mut sizes = Vec::new();
        for (fold, fitted) in output.folds.iter().zip(fitted) {
            scores.extend(fitted.model.predict(&fold.test)?);
            labels.extend(fold.test_labels.iter());
            weights.extend(fitted.model.members());
            sizes.push(fitted.ensemble_size);
            trajectories.extend(fitted.trajectory);
        }
        let labels = LabelVector::new(labels)?;
        let folds = output.folds.len() as f64;
        Ok(MethodReport {
            method: self.name().to_string(),
            dataset: dataset.to_string(),
            test_auc: auc(&scores, &labels)?,
            test_brier: brier(&scores, &labels)?,
            trajectories,
            weights: merge_weights(weights).into_iter().map(|(id, w)| (id, w / folds)).collect(),
            ensemble_sizes: sizes,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }
}

fn stacking_rows(
    val: &PredictionMatrix,
    labels: &LabelVector,
    params: &MethodParams,
) -> Result<(PredictionMatrix, LabelVector)> {
    if params.val_fraction >= 1.0 {
        return Ok((val.clone(), labels.clone()));
    }
    let rows = subsample_rows(labels, params.val_fraction, params.seed)?;
    Ok((val.select_rows(&rows), labels.select(&rows)))
}

/// The bag group with the highest AUC after averaging its bags.
pub struct BestBase;

impl BestBase {
    fn best_group(matrix: &PredictionMatrix, labels: &LabelVector) -> Result<(usize, PredictionMatrix)> {
        let groups = bag_aggregate(matrix)?;
        let aucs = individual_aucs(&groups, labels)?;
        let mut best = 0;
        for (g, &a) in aucs.iter().enumerate() {
            if a > aucs[best] {
                best = g;
            }
        }
        Ok((best, groups))
    }
}

impl EnsembleMethod for BestBase {
    fn name(&self) -> &str {
        "best_base"
    }

    fn fit(&self, val: &PredictionMatrix, labels: &LabelVector, _: &MethodParams) -> Result<Fitted> {
        let (best, groups) = BestBase::best_group(val, labels)?;
        let name = &groups.classifier_ids()[best];
        let members: Vec<String> = (0..val.n_classifiers())
            .filter(|&j| val.group_of(j) == name)
            .map(|j| val.classifier_ids()[j].clone())
            .collect();
        Ok(Fitted::plain(EnsembleModel::uniform(&members)?))
    }

    /// The largest pooled test AUC over bag-averaged classifiers. This is a
    /// reference ceiling chosen on test data, not a fitted method.
    fn evaluate(&self, output: &PipelineOutput, _: &MethodParams, dataset: &str) -> Result<MethodReport> {
        let start = Instant::now();
        let (pooled, labels) = output.pooled_test()?;
        let (best, groups) = BestBase::best_group(&pooled, &labels)?;
        let column = groups.column(best);
        let name = groups.classifier_ids()[best].clone();
        let bags = (0..pooled.n_classifiers()).filter(|&j| pooled.group_of(j) == name).count();
        Ok(MethodReport {
            method: self.name().to_string(),
            dataset: dataset.to_string(),
            test_auc: auc(column, &labels)?,
            test_brier: brier(column, &labels)?,
            trajectories: Vec::new(),
            weights: vec![(name, 1.0)],
            ensemble_sizes: vec![bags],
            wall_time: start.elapsed().as_secs_f64(),
        })
    }
}

/// Equal-weight mean of every column.
pub struct Mean;

impl EnsembleMethod for Mean {
    fn name(&self) -> &str {
        "mean"
    }

    fn fit(&self, val: &PredictionMatrix, _: &LabelVector, _: &MethodParams) -> Result<Fitted> {
        Ok(Fitted::plain(EnsembleModel::uniform(val.classifier_ids())?))
    }
}

pub struct Greedy;

impl EnsembleMethod for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn fit(&self, val: &PredictionMatrix, labels: &LabelVector, params: &MethodParams) -> Result<Fitted> {
        let max_size = params.greedy_max_size.unwrap_or(val.n_classifiers()).min(val.n_classifiers());
        let trajectory = greedy_select(val, labels, max_size)?;
        selection_fit(trajectory)
    }
}

pub struct Ces;

impl EnsembleMethod for Ces {
    fn name(&self) -> &str {
        "ces"
    }

    fn fit(&self, val: &PredictionMatrix, labels: &LabelVector, params: &MethodParams) -> Result<Fitted> {
        let (trajectory, _) = ces_select(val, labels, &params.ces)?;
        selection_fit(trajectory)
    }
}

/// The validation-optimal prefix of a trajectory.
fn selection_fit(trajectory: SelectionTrajectory) -> Result<Fitted> {
    let best = trajectory.best_index().ok_or(Error::Empty("selection trajectory"))?;
    Ok(Fitted {
        model: trajectory.best_model()?,
        ensemble_size: best + 1,
        trajectory: Some(trajectory),
        sweep: None,
    })
}

pub struct StackAll;

impl EnsembleMethod for StackAll {
    fn name(&self) -> &str {
        "stack_all"
    }

    fn fit(&self, val: &PredictionMatrix, labels: &LabelVector, params: &MethodParams) -> Result<Fitted> {
        let (val, labels) = stacking_rows(val, labels, params)?;
        Ok(Fitted::plain(stack_all(&val, &labels, &params.logistic)?))
    }
}

pub struct StackAggregated;

impl EnsembleMethod for StackAggregated {
    fn name(&self) -> &str {
        "stack_aggregated"
    }

    fn fit(&self, val: &PredictionMatrix, labels: &LabelVector, params: &MethodParams) -> Result<Fitted> {
        let (val, labels) = stacking_rows(val, labels, params)?;
        Ok(Fitted::plain(stack_aggregated(&val, &labels, &params.logistic)?))
    }
}

pub struct ClusterStack {
    pub mode: ClusterMode,
}

impl EnsembleMethod for ClusterStack {
    fn name(&self) -> &str {
        match self.mode {
            ClusterMode::Intra => "intra_cluster",
            ClusterMode::Inter => "inter_cluster",
        }
    }

    fn fit(&self, val: &PredictionMatrix, labels: &LabelVector, params: &MethodParams) -> Result<Fitted> {
        let (val, labels) = stacking_rows(val, labels, params)?;
        let m = val.n_classifiers();
        let sweep = match params.cluster_k {
            Some(k) => {
                if k < 1 || k > m {
                    return Err(Error::InvalidParam(format!("cluster k = {k} outside [1, {m}]")));
                }
                None
            }
            None => Some(sweep_k(&val, &labels, self.mode, 1..=m, params.cluster_distance, &params.logistic)?),
        };
        let k = sweep.as_ref().map_or_else(|| params.cluster_k.unwrap_or(1), |s| s.best_k);
        let distances = crate::cluster::column_distances(&val, &labels, params.cluster_distance)?;
        let assignment = crate::cluster::cut_k(&crate::cluster::hcluster(&distances)?, k)?;
        let model = fit_with_assignment(&val, &labels, self.mode, &assignment, &params.logistic)?;
        Ok(Fitted {
            model: EnsembleModel::Cluster(model),
            trajectory: None,
            sweep,
            ensemble_size: k,
        })
    }
}

/// Methods by name.
#[derive(Clone, Default)]
pub struct MethodRegistry {
    methods: BTreeMap<String, Arc<dyn EnsembleMethod>>,
}

impl MethodRegistry {
    pub fn builtin() -> MethodRegistry {
        let mut r = MethodRegistry::default();
        r.register(Arc::new(BestBase));
        r.register(Arc::new(Mean));
        r.register(Arc::new(Greedy));
        r.register(Arc::new(Ces));
        r.register(Arc::new(StackAll));
        r.register(Arc::new(StackAggregated));
        r.register(Arc::new(ClusterStack { mode: ClusterMode::Intra }));
        r.register(Arc::new(ClusterStack { mode: ClusterMode::Inter }));
        r
    }

    pub fn register(&mut self, method: Arc<dyn EnsembleMethod>) {
        self.methods.insert(method.name().to_string(), method);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn EnsembleMethod>> {
        self.methods.get(name).cloned().ok_or_else(|| Error::UnknownStrategy {
            kind: "method",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.methods.keys().cloned().collect()
    }

    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Arc<dyn EnsembleMethod>>> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::{make_fold_plan, run_pipeline, LearnerRegistry};
    use crate::data::Dataset;
    use rand::{Rng, SeedableRng};

    fn output() -> PipelineOutput {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 150;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let rows = labels
            .iter()
            .map(|&l| vec![f64::from(l) + r.random::<f64>() * 1.5, r.random::<f64>(), f64::from(l) * 0.3 + r.random::<f64>()])
            .collect();
        let data = Dataset::new(
            (0..n).map(|i| format!("r{i}")).collect(),
            vec!["a".into(), "b".into(), "c".into()],
            rows,
            labels.iter().map(|&l| Some(l)).collect(),
        )
        .unwrap();
        let y = LabelVector::new(labels).unwrap();
        let plan = make_fold_plan(&y, 3, 3, 3, 4).unwrap();
        let learners = LearnerRegistry::builtin().resolve(&["logistic", "tree", "knn"]).unwrap();
        run_pipeline(&data, &y, &learners, &plan).unwrap()
    }

    #[test]
    fn every_builtin_evaluates() {
        let out = output();
        let registry = MethodRegistry::builtin();
        let mut names = registry.names();
        names.sort();
        let mut expected: Vec<String> = BUILTIN_METHODS.iter().map(|s| s.to_string()).collect();
        expected.sort();
        assert_eq!(names, expected);
        let params = MethodParams { ces: CesParams { max_size: 15, ..Default::default() }, ..Default::default() };
        for name in BUILTIN_METHODS {
            let report = registry.get(name).unwrap().evaluate(&out, &params, "toy").unwrap();
            assert!((0.0..=1.0).contains(&report.test_auc), "{name}");
            assert!((0.0..=1.0).contains(&report.test_brier), "{name}");
            assert!(report.test_auc > 0.6, "{name}: {}", report.test_auc);
            let selection = name == "greedy" || name == "ces";
            assert_eq!(report.trajectories.len(), if selection { 3 } else { 0 }, "{name}");
        }
    }

    #[test]
    fn best_base_is_max_pooled_group_auc() {
        let out = output();
        let report = BestBase.evaluate(&out, &MethodParams::default(), "toy").unwrap();
        let (pooled, y) = out.pooled_test().unwrap();
        let groups = bag_aggregate(&pooled).unwrap();
        let max = individual_aucs(&groups, &y).unwrap().into_iter().fold(0.0, f64::max);
        assert_eq!(report.test_auc, max);
    }

    #[test]
    fn pooled_auc_matches_pair_count() {
        let out = output();
        let report = Mean.evaluate(&out, &MethodParams::default(), "toy").unwrap();
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for fold in &out.folds {
            let all: Vec<usize> = (0..fold.test.n_classifiers()).collect();
            scores.extend(crate::combine::mean_of_columns(&fold.test, &all).unwrap());
            labels.extend(fold.test_labels.iter());
        }
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        assert!((report.test_auc - wins / pairs).abs() < 1e-12);
    }

    #[test]
    fn identical_columns_mean_equals_single_column() {
        let c: Vec<f64> = (0..40).map(|i| ((i * 37) % 40) as f64 / 40.0).collect();
        let y = LabelVector::new((0..40).map(|i| u8::from(i % 2 == 0)).collect()).unwrap();
        let m = PredictionMatrix::from_columns(vec![c.clone(), c.clone(), c.clone()]).unwrap();
        let fitted = Mean.fit(&m, &y, &MethodParams::default()).unwrap();
        let p = fitted.model.predict(&m).unwrap();
        assert_eq!(auc(&p, &y).unwrap(), auc(&c, &y).unwrap());
    }

    #[test]
    fn unknown_method() {
        assert!(matches!(
            MethodRegistry::builtin().get("boosting"),
            Err(Error::UnknownStrategy { kind: "method", .. })
        ));
    }

    #[test]
    fn fixed_cluster_k_is_respected() {
        let out = output();
        let params = MethodParams { cluster_k: Some(2), ..Default::default() };
        let fold = &out.folds[0];
        let fitted = ClusterStack { mode: ClusterMode::Intra }.fit(&fold.validation, &fold.validation_labels, &params).unwrap();
        assert_eq!(fitted.ensemble_size, 2);
        assert!(fitted.sweep.is_none());
        let params = MethodParams { cluster_k: Some(99), ..Default::default() };
        assert!(ClusterStack { mode: ClusterMode::Inter }.fit(&fold.validation, &fold.validation_labels, &params).is_err());
    }
}
