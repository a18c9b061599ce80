pub mod analyze;
pub mod compare;
pub mod run;
pub mod synth;

use std::path::PathBuf;

use clap::Args;
use ensemblekit::io::{read_aligned_labels, read_groups_file, read_predictions_file};
use ensemblekit::{LabelVector, PredictionMatrix};

use crate::error::CliResult;
use crate::output::Provenance;

/// A prediction matrix with its labels and optional bag groups.
#[derive(Debug, Args)]
pub struct PoolArgs {
    /// Prediction CSV: `instance_id,<classifier ids...>`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Labels CSV: `instance_id,label`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Bag-group sidecar: `classifier_id<TAB>group` lines.
    #[arg(long)]
    pub groups: Option<PathBuf>,
}

impl PoolArgs {
    pub fn load(&self, prov: &mut Provenance) -> CliResult<(PredictionMatrix, LabelVector)> {
        prov.input("predictions", &self.predictions)?.input("labels", &self.labels)?;
        let groups = match &self.groups {
            Some(path) => {
                prov.input("groups", path)?;
                Some(read_groups_file(path)?)
            }
            None => None,
        };
        let matrix = read_predictions_file(&self.predictions, groups.as_ref())?;
        let labels = read_aligned_labels(&self.labels, &matrix)?;
        Ok((matrix, labels))
    }
}

/// Shortest representation that reads back to the same value.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
