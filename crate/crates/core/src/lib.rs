//! Building, selecting and diagnosing heterogeneous classifier ensembles
//! from matrices of probabilistic predictions.

pub mod cluster;
pub mod combine;
pub mod cv;
pub mod data;
pub mod datagen;
pub mod error;
pub mod io;
pub mod methods;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod select;
pub mod stack;
pub mod stats;

pub use data::{validate_matrix, Dataset, LabelVector, PredictionMatrix};
pub use error::{Error, Result};
pub use methods::{EnsembleMethod, MethodParams, MethodRegistry, MethodReport};
pub use model::{EnsembleModel, MetaInputs, ModelKind};
