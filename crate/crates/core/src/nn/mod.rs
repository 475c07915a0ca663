//! Multilayer perceptron trained with the delta rule.
//!
//! The output error term is `f'(y)(y - t)`, hidden terms are
//! `f'(y) * sum(delta * w)`, and each synapse moves by `-rate * delta * x`,
//! which is plain stochastic gradient descent on `sum((y - t)^2) / 2`.
//! With the sigmoid, `f'(y) = y(1 - y)`.

mod encode;
mod metrics;
mod mlp;
mod train;

use alloc::vec::Vec;

use thiserror::Error;

pub use encode::{bin_count_label, decode_blocks, encode_session, FEATURES_PER_QUESTION, INPUT_SIZE};
pub use metrics::{evaluate, Metrics};
pub use mlp::{argmax, hidden_delta, mse, output_delta, Activation, Forward, Gradients, Layer, Mlp};
pub use train::{split_indices, train, Dataset, EpochStats, Split, StopReason, TrainConfig, TrainReport};

/// Default hidden widths for the 270-input, 3-output classifier.
pub const DEFAULT_HIDDEN: [usize; 2] = [32, 32];
pub const OUTPUT_SIZE: usize = 3;

/// `[270, 32, 32, 3]`.
pub fn default_layer_sizes() -> Vec<usize> {
    let mut sizes = Vec::with_capacity(4);
    sizes.push(INPUT_SIZE);
    sizes.extend_from_slice(&DEFAULT_HIDDEN);
    sizes.push(OUTPUT_SIZE);
    sizes
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("invalid layer sizes {0:?}")]
    Architecture(Vec<usize>),
    #[error("empty sample set")]
    EmptySet,
    #[error("need {expected} standard records, got {found}")]
    RecordCount { expected: usize, found: usize },
    #[error("dataset of {0} rows leaves an empty train, validation or test split")]
    InsufficientData(usize),
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
    #[error("invalid dataset: {0}")]
    Dataset(&'static str),
}
