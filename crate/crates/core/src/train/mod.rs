//! Optimization: initialization, Adam, dropout, the epoch loop with early
//! stopping, and grid search.

pub mod adam;
pub mod dropout;
mod fit;
mod grid;
pub mod init;

use thiserror::Error;

use crate::embed::EmbeddingError;
use crate::model::ModelError;
use crate::tensor::TensorError;

pub use adam::{adam_step, AdamState};
pub use dropout::{dropout_apply, Dropout, DropoutMode};
pub use fit::{evaluate_loss, fit, fit_from, EpochRecord, Fitted, LossAccuracy, TrainConfig, TrainingReport};
pub use grid::{grid_search, CellResult, GridCell, GridResult, GridSpec};
pub use init::{glorot_init, glorot_limit};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0} corpus has no labeled sentences")]
    EmptyCorpus(&'static str),
    #[error("loss diverged to {loss} in epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}
