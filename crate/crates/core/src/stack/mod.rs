//! Stacked generalisation with a logistic level-1 model.
//!
//! `stack_all` uses every base column as a meta-feature; `stack_aggregated`
//! first averages each bag group into one column.

mod logistic;

pub use logistic::{
    fit_logistic, fit_logistic_from, predict_logistic, sigmoid, LogisticConfig, LogisticFit,
    LogisticModel, LogisticObjective,
};

use rand::seq::index::sample;

use crate::combine::bag_aggregate;
use crate::data::{LabelVector, PredictionMatrix};
use crate::error::{Error, Result};
use crate::model::{EnsembleModel, MetaInputs};
use crate::rng;

pub fn stack_all(
    val: &PredictionMatrix,
    labels: &LabelVector,
    config: &LogisticConfig,
) -> Result<EnsembleModel> {
    check_rows(val, labels)?;
    let model = fit_logistic(val.columns(), labels, config)?;
    Ok(EnsembleModel::LogisticMeta {
        inputs: MetaInputs::Columns(val.classifier_ids().to_vec()),
        model,
    })
}

pub fn stack_aggregated(
    val: &PredictionMatrix,
    labels: &LabelVector,
    config: &LogisticConfig,
) -> Result<EnsembleModel> {
    check_rows(val, labels)?;
    let aggregated = bag_aggregate(val)?;
    let model = fit_logistic(aggregated.columns(), labels, config)?;
    Ok(EnsembleModel::LogisticMeta {
        inputs: MetaInputs::BagGroups(aggregated.classifier_ids().to_vec()),
        model,
    })
}

fn check_rows(val: &PredictionMatrix, labels: &LabelVector) -> Result<()> {
    if val.n_instances() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} labels for {} validation rows",
            labels.len(),
            val.n_instances()
        )));
    }
    Ok(())
}

/// Level-1 coefficients as signed values and as magnitudes normalised to
/// sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaWeights {
    pub ids: Vec<String>,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

pub fn meta_weights(model: &EnsembleModel) -> Result<MetaWeights> {
    let EnsembleModel::LogisticMeta { inputs, model } = model else {
        return Err(Error::InvalidParam(format!(
            "meta weights need a logistic meta model, got {}",
            model.kind()
        )));
    };
    let raw = model.coefficients.clone();
    Ok(MetaWeights {
        ids: inputs.ids().to_vec(),
        normalized: normalize_magnitudes(&raw),
        raw,
    })
}

/// `|w_j| / sum |w|`; all zeros when every coefficient is zero.
pub(crate) fn normalize_magnitudes(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().map(|w| w.abs()).sum();
    if total == 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|w| w.abs() / total).collect()
}

/// Rows kept when only `fraction` of a validation set is used for fitting.
/// Draws uniformly without replacement, then tops up so both classes stay
/// represented. Indices are returned in ascending order.
pub fn subsample_rows(labels: &LabelVector, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "validation fraction must be in (0, 1], got {fraction}"
        )));
    }
    let n = labels.len();
    if fraction == 1.0 {
        return Ok((0..n).collect());
    }
    let take = ((fraction * n as f64).round() as usize).clamp(2.min(n), n);
    let mut rng = rng::stream(seed, &[rng::tag("val-fraction")]);
    let mut rows = sample(&mut rng, n, take).into_vec();
    rows.sort_unstable();
    for class in [0u8, 1] {
        if !rows.iter().any(|&i| labels.get(i) == class) {
            if let Some(first) = (0..n).find(|&i| labels.get(i) == class) {
                rows.push(first);
            }
        }
    }
    rows.sort_unstable();
    rows.dedup();
    Ok(rows)
}
