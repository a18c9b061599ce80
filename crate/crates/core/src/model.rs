//! Fitted ensemble combiners.

use std::collections::HashMap;
use std::fmt;

use crate::cluster::{ClusterMode, ClusterStackModel};
use crate::combine::bag_aggregate;
use crate::data::PredictionMatrix;
use crate::error::{Error, Result};
use crate::stack::{normalize_magnitudes, predict_logistic, LogisticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    WeightedMean,
    LogisticMeta,
    IntraCluster,
    InterCluster,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::WeightedMean => "weighted_mean",
            ModelKind::LogisticMeta => "logistic_meta",
            ModelKind::IntraCluster => "intra_cluster",
            ModelKind::InterCluster => "inter_cluster",
        })
    }
}

/// Where a logistic meta-model reads its features from.
#[derive(Debug, Clone, PartialEq)]
pub enum MetaInputs {
    /// Base columns by classifier id.
    Columns(Vec<String>),
    /// Bag-group means, in the given group order.
    BagGroups(Vec<String>),
}

impl MetaInputs {
    pub fn ids(&self) -> &[String] {
        match self {
            MetaInputs::Columns(ids) | MetaInputs::BagGroups(ids) => ids,
        }
    }

    fn features(&self, matrix: &PredictionMatrix) -> Result<Vec<Vec<f64>>> {
        match self {
            MetaInputs::Columns(ids) => Ok(matrix
                .column_indices(ids)?
                .into_iter()
                .map(|j| matrix.column(j).to_vec())
                .collect()),
            MetaInputs::BagGroups(groups) => {
                let aggregated = bag_aggregate(matrix)?;
                Ok(aggregated
                    .column_indices(groups)?
                    .into_iter()
                    .map(|j| aggregated.column(j).to_vec())
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleModel {
    /// Convex combination of base columns.
    WeightedMean { members: Vec<(String, f64)> },
    LogisticMeta { inputs: MetaInputs, model: LogisticModel },
    Cluster(ClusterStackModel),
}

impl EnsembleModel {
    /// Checks weights are non-negative and sum to one (within 1e-9).
    pub fn weighted_mean(members: Vec<(String, f64)>) -> Result<EnsembleModel> {
        if members.is_empty() {
            return Err(Error::Empty("weighted mean without members"));
        }
        if let Some((id, w)) = members.iter().find(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParam(format!("negative or non-finite weight {w} for {id}")));
        }
        let total: f64 = members.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!("weights sum to {total}, expected 1")));
        }
        Ok(EnsembleModel::WeightedMean { members })
    }

    /// Equal-weight mean of the given columns.
    pub fn uniform<S: AsRef<str>>(ids: &[S]) -> Result<EnsembleModel> {
        let w = 1.0 / ids.len() as f64;
        EnsembleModel::weighted_mean(ids.iter().map(|id| (id.as_ref().to_string(), w)).collect())
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            EnsembleModel::WeightedMean { .. } => ModelKind::WeightedMean,
            EnsembleModel::LogisticMeta { .. } => ModelKind::LogisticMeta,
            EnsembleModel::Cluster(c) => match c.mode {
                ClusterMode::Intra => ModelKind::IntraCluster,
                ClusterMode::Inter => ModelKind::InterCluster,
            },
        }
    }

    /// Ensemble scores for every row of `matrix`. Columns are looked up by
    /// classifier id, so the matrix may carry extra columns.
    pub fn predict(&self, matrix: &PredictionMatrix) -> Result<Vec<f64>> {
        match self {
            EnsembleModel::WeightedMean { members } => {
                let mut out = vec![0.0; matrix.n_instances()];
                for (id, w) in members {
                    let j = matrix
                        .column_index(id)
                        .ok_or_else(|| Error::UnknownId(id.clone()))?;
                    for (o, v) in out.iter_mut().zip(matrix.column(j)) {
                        *o += w * v;
                    }
                }
                Ok(out)
            }
            EnsembleModel::LogisticMeta { inputs, model } => {
                predict_logistic(model, &inputs.features(matrix)?)
            }
            EnsembleModel::Cluster(c) => c.predict(matrix),
        }
    }

    /// Per-input weights for reporting: mixture weights for a weighted mean,
    /// normalised coefficient magnitudes for stacked models.
    pub fn members(&self) -> Vec<(String, f64)> {
        match self {
            EnsembleModel::WeightedMean { members } => members.clone(),
            EnsembleModel::LogisticMeta { inputs, model } => inputs
                .ids()
                .iter()
                .cloned()
                .zip(normalize_magnitudes(&model.coefficients))
                .collect(),
            EnsembleModel::Cluster(c) => c.member_weights(),
        }
    }

    /// Classifier ids this model reads from.
    pub fn referenced_ids(&self) -> Vec<String> {
        match self {
            EnsembleModel::WeightedMean { members } => members.iter().map(|(id, _)| id.clone()).collect(),
            EnsembleModel::LogisticMeta { inputs, .. } => inputs.ids().to_vec(),
            EnsembleModel::Cluster(c) => c.column_ids.clone(),
        }
    }
}

/// Sums member weights per id, keeping first-appearance order.
pub(crate) fn merge_weights(pairs: impl IntoIterator<Item = (String, f64)>) -> Vec<(String, f64)> {
    let mut order: Vec<String> = Vec::new();
    let mut sums: HashMap<String, f64> = HashMap::new();
    for (id, w) in pairs {
        if !sums.contains_key(&id) {
            order.push(id.clone());
        }
        *sums.entry(id).or_insert(0.0) += w;
    }
    order
        .into_iter()
        .map(|id| {
            let w = sums[&id];
            (id, w)
        })
        .collect()
}
