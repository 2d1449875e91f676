//! Feed-forward chord predictor: 12-bit note vectors in, 48 chord classes out.

mod harmonize;
mod mlp;
pub mod persist;
mod train;

use std::path::PathBuf;

use thiserror::Error;

pub use harmonize::harmonize;
pub use mlp::{argmax, softmax, DenseLayer, Gradient, MlpModel, INPUT_WIDTH, OUTPUT_WIDTH};
pub use train::{accuracy, build_dataset, train, train_with_progress, Dataset, TrainConfig};

use crate::symbolic::SymbolicError;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("model shape: {0}")]
    Shape(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
