use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{mse, Mlp, NnError};
use crate::question::Dimension;
use crate::rng;

/// Rows of features with matching target vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl Dataset {
    /// General dataset: equal row counts, uniform widths, finite values.
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self, NnError> {
        if features.len() != targets.len() {
            return Err(NnError::Shape {
                expected: features.len(),
                found: targets.len(),
            });
        }
        for rows in [&features, &targets] {
            if let Some(first) = rows.first() {
                if rows.iter().any(|r| r.len() != first.len()) {
                    return Err(NnError::Dataset("ragged rows"));
                }
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(NnError::Dataset("non-finite value"));
            }
        }
        Ok(Dataset { features, targets })
    }

    /// Risk-profile dataset: features in `[-1, 1]`, one-hot (HA, RD, NS) targets.
    pub fn from_labels(features: Vec<Vec<f64>>, labels: &[Dimension]) -> Result<Self, NnError> {
        if features.iter().flatten().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(NnError::Dataset("feature outside [-1, 1]"));
        }
        let targets = labels
            .iter()
            .map(|d| {
                let mut t = alloc::vec![0.0; 3];
                t[d.label_index()] = 1.0;
                t
            })
            .collect();
        Dataset::new(features, targets)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    /// MSE of `net` over the rows `indices`.
    pub fn mse_on(&self, net: &Mlp, indices: &[usize]) -> Result<f64, NnError> {
        let mut outputs = Vec::with_capacity(indices.len());
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            outputs.push(net.forward(&self.features[i])?.activations.pop().unwrap());
            targets.push(self.targets[i].as_slice());
        }
        mse(&outputs, &targets)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a new best validation MSE before stopping.
    pub patience: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            max_epochs: 500,
            patience: 20,
            train_fraction: 0.70,
            val_fraction: 0.15,
            test_fraction: 0.15,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(NnError::Config("learning_rate must be positive"));
        }
        let fractions = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(NnError::Config("split fractions must lie in [0, 1]"));
        }
        if (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(NnError::Config("split fractions must sum to 1"));
        }
        if (self.test_fraction - 0.15).abs() > 1e-12 {
            return Err(NnError::Config("test fraction is fixed at 0.15"));
        }
        Ok(())
    }
}

/// Row indices of the three partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

const SPLIT_STREAM: u64 = 0x5b1d;
const EPOCH_STREAM: u64 = 0xe90c;

fn round(x: f64) -> usize {
    libm::floor(x + 0.5) as usize
}

/// Shuffles `0..n` with the config seed and cuts it into train, validation
/// and test blocks of `round(n * fraction)` rows (test takes the remainder).
pub fn split_indices(n: usize, cfg: &TrainConfig) -> Result<Split, NnError> {
    cfg.validate()?;
    let n_train = round(n as f64 * cfg.train_fraction);
    let n_val = round(n as f64 * cfg.val_fraction);
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(NnError::InsufficientData(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    rng::shuffle(&mut rng::seeded(rng::derive(cfg.seed, SPLIT_STREAM)), &mut idx);
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    Ok(Split {
        train: idx,
        validation,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStopping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Validation MSE of the untrained network.
    pub initial_val_mse: f64,
    pub epochs: Vec<EpochStats>,
    pub stop_reason: StopReason,
    /// Epoch whose weights were kept (0 = the initial network).
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub split: Split,
    pub net: Mlp,
}

/// Per-sample SGD over shuffled training rows each epoch, keeping the
/// weights with the lowest validation MSE.
pub fn train(mut net: Mlp, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport, NnError> {
    let split = split_indices(data.len(), cfg)?;
    let initial_val_mse = data.mse_on(&net, &split.validation)?;
    let mut best = (0usize, initial_val_mse, net.clone());
    let mut since_best = 0;
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    let mut order = split.train.clone();
    let mut rng = rng::seeded(rng::derive(cfg.seed, EPOCH_STREAM));

    for epoch in 1..=cfg.max_epochs {
        rng::shuffle(&mut rng, &mut order);
        for &i in &order {
            net.sgd_step(&data.features[i], &data.targets[i], cfg.learning_rate)?;
        }
        let stats = EpochStats {
            epoch,
            train_mse: data.mse_on(&net, &split.train)?,
            val_mse: data.mse_on(&net, &split.validation)?,
        };
        epochs.push(stats);
        if stats.val_mse < best.1 {
            best = (epoch, stats.val_mse, net.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stop_reason = StopReason::EarlyStopping;
                break;
            }
        }
    }

    let (best_epoch, best_val_mse, net) = best;
    Ok(TrainReport {
        initial_val_mse,
        epochs,
        stop_reason,
        best_epoch,
        best_val_mse,
        split,
        net,
    })
}
