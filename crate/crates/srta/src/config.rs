//! Training configuration file (TOML). Every key is optional.
//!
//! ```toml
//! learning_rate = 0.05
//! max_epochs = 500
//! patience = 20
//! train_fraction = 0.70
//! val_fraction = 0.15
//! test_fraction = 0.15
//! seed = 0
//! hidden = [32, 32]
//! activation = "sigmoid"
//! ```

use serde::{Deserialize, Serialize};
use srta_core::nn::{Activation, NnError, TrainConfig, DEFAULT_HIDDEN, INPUT_SIZE, OUTPUT_SIZE};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(#[from] NnError),
    #[error("config: hidden layer sizes must be positive")]
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let c = TrainConfig::default();
        TrainSettings {
            learning_rate: c.learning_rate,
            max_epochs: c.max_epochs,
            patience: c.patience,
            train_fraction: c.train_fraction,
            val_fraction: c.val_fraction,
            test_fraction: c.test_fraction,
            seed: c.seed,
            hidden: DEFAULT_HIDDEN.to_vec(),
            activation: Activation::Sigmoid,
        }
    }
}

impl TrainSettings {
    pub fn parse(s: &str) -> Result<TrainSettings, ConfigError> {
        let settings: TrainSettings = toml::from_str(s)?;
        settings.train_config().validate()?;
        if settings.hidden.contains(&0) {
            return Err(ConfigError::Hidden);
        }
        Ok(settings)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            patience: self.patience,
            train_fraction: self.train_fraction,
            val_fraction: self.val_fraction,
            test_fraction: self.test_fraction,
            seed: self.seed,
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(INPUT_SIZE)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(OUTPUT_SIZE))
            .collect()
    }
}
