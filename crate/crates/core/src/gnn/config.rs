use serde::{Deserialize, Serialize};

use crate::prob::{GRAPH_FEATURES, NODE_FEATURES};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
}

/// Model shape. The decoder maps `decoder_input_width()` through
/// `decoder_hidden` (ReLU after each) to one output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub aggregator: Aggregator,
    pub decoder_hidden: Vec<usize>,
    pub include_graph_features: bool,
    pub n_blocks: usize,
    pub n_h: usize,
    pub n_in: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            aggregator: Aggregator::Mean,
            decoder_hidden: vec![64, 32, 16],
            include_graph_features: true,
            n_blocks: 7,
            n_h: 16,
            n_in: NODE_FEATURES,
        }
    }
}

impl ModelConfig {
    pub fn without_graph_features(self) -> Self {
        ModelConfig {
            include_graph_features: false,
            ..self
        }
    }

    pub fn decoder_input_width(&self) -> usize {
        2 * self.n_h + if self.include_graph_features { GRAPH_FEATURES } else { 0 }
    }

    /// Decoder layer widths from input to the final scalar.
    pub fn decoder_widths(&self) -> Vec<usize> {
        let mut w = vec![self.decoder_input_width()];
        w.extend(&self.decoder_hidden);
        w.push(1);
        w
    }

    pub fn check(&self) -> Result<(), String> {
        if self.n_blocks == 0 || self.n_h == 0 || self.n_in == 0 {
            return Err("n_blocks, n_h and n_in must be positive".into());
        }
        if self.decoder_hidden.contains(&0) {
            return Err("decoder widths must be positive".into());
        }
        Ok(())
    }

    /// Closed-form number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        let conv = |i: usize, o: usize| 3 * (2 * i * o + o);
        let blocks = conv(self.n_in, self.n_h) + (self.n_blocks - 1) * conv(self.n_h, self.n_h);
        let bn = self.n_blocks * 2 * 2 * self.n_h;
        let dec: usize = self.decoder_widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        blocks + bn + dec
    }
}

pub fn parameter_count(config: &ModelConfig) -> usize {
    config.parameter_count()
}
