//! Heterogeneous message passing over shop and non-shop nodes, and the
//! predictor that turns endpoint features into one value per edge.

mod checkpoint;
mod config;
mod model;
mod relations;

use thiserror::Error;

use crate::autodiff::AutodiffError;

pub use checkpoint::Checkpoint;
pub use config::{parameter_count, Aggregator, ModelConfig};
pub use model::{
    apply_bn_updates, check_params, decode_edges, encode, forward, init_params, Encoded, Forward, ModelInput,
};
pub use relations::{build_relations, RelationGraph};

#[derive(Debug, Error)]
pub enum GnnError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("{what}: expected {}x{}, got {}x{}", expected.0, expected.1, got.0, got.1)]
    InputShape {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("model uses graph features but none were supplied")]
    MissingGraphFeatures,
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("parameters do not match the model config: {0}")]
    ParamMismatch(String),
    #[error("checkpoint parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, GnnError>;
