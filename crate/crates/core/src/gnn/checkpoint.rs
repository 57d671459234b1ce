use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_params, GnnError, ModelConfig, Result};
use crate::autodiff::{AdamState, BnState, ParamStore, Tensor};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    adam: AdamState,
    batch_norm: BTreeMap<String, BnState>,
    config: ModelConfig,
    params: BTreeMap<String, Tensor>,
}

/// A model configuration with its trained state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub store: ParamStore,
}

impl Checkpoint {
    pub fn to_json_string(&self) -> String {
        let (params, adam, batch_norm) = self.store.to_parts();
        let file = CheckpointFile {
            adam,
            batch_norm,
            config: self.config.clone(),
            params,
        };
        let mut s = serde_json::to_string(&file).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    /// Parses and validates shapes against the embedded configuration.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text).map_err(|e| GnnError::Parse(e.to_string()))?;
        file.config.check().map_err(GnnError::Config)?;
        let store = ParamStore::from_parts(file.params, file.adam, file.batch_norm)
            .map_err(|e| GnnError::ParamMismatch(e.to_string()))?;
        check_params(&file.config, &store)?;
        Ok(Checkpoint {
            config: file.config,
            store,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::fsutil::write_atomic(path, self.to_json_string().as_bytes()).map_err(|source| GnnError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| GnnError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }
}
