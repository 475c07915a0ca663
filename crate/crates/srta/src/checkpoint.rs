//! Versioned JSON model checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};
use srta_core::nn::{Activation, Mlp, NnError};
use thiserror::Error;

pub const FORMAT: &str = "srta-mlp";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a model checkpoint (format `{0}`)")]
    Format(String),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("invalid checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Net(#[from] NnError),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    /// Per layer, `outputs x inputs` row-major.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Checkpoint {
    pub fn from_net(net: &Mlp, seed: u64) -> Checkpoint {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            layer_sizes: net.layer_sizes().to_vec(),
            activation: net.activation(),
            weights: net.layers().iter().map(|l| l.weights().to_vec()).collect(),
            biases: net.layers().iter().map(|l| l.biases().to_vec()).collect(),
            seed,
        }
    }

    pub fn to_net(&self) -> Result<Mlp, CheckpointError> {
        Ok(Mlp::from_parts(
            &self.layer_sizes,
            self.activation,
            self.weights.clone(),
            self.biases.clone(),
        )?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Checkpoint, CheckpointError> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.format != FORMAT {
            return Err(CheckpointError::Format(c.format));
        }
        if c.version != VERSION {
            return Err(CheckpointError::Version(c.version));
        }
        c.to_net()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::from_json(&std::fs::read_to_string(path)?)
    }
}
