//! Dataset assembly, splitting, minibatch training and evaluation.

mod dataset;
mod tables;
mod train;

use std::path::Path;

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::gnn::GnnError;
use crate::graph::GraphError;
use crate::prob::ProbError;

pub use dataset::{build_dataset, Dataset, DatasetManifest, Sample, Split, SplitRecord};
pub(crate) use dataset::write_json;
pub use tables::{curve_csv, predictions_csv, read_predictions, write_curve, write_predictions};
pub use train::{
    evaluate, initial_params, metrics_from_rows, pearson, predict, train, Batch, CurvePoint, Evaluation, Metrics,
    PredictionRow, TrainConfig, TrainOutcome,
};

/// Default number of samples per mall.
pub const DEFAULT_SAMPLES: usize = 200;

/// Training samples per mall for the default four-to-one split.
pub fn default_train_count(samples_per_mall: usize) -> usize {
    samples_per_mall * 4 / 5
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("mall {mall_id}: {source}")]
    Mall {
        mall_id: String,
        #[source]
        source: ProbError,
    },
    #[error("mall {mall_id}, sample {sample}: {source}")]
    Sample {
        mall_id: String,
        sample: usize,
        #[source]
        source: ProbError,
    },
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error("mall {mall_id} has {have} samples, {need} needed for training")]
    InsufficientSamples { mall_id: String, have: usize, need: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("training split is empty")]
    EmptyTrainSplit,
    #[error("{0}")]
    Config(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<AutodiffError> for PipelineError {
    fn from(e: AutodiffError) -> Self {
        PipelineError::Gnn(GnnError::Autodiff(e))
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

#[cfg(test)]
mod tests;
