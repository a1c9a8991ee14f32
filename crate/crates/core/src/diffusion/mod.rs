//! Tabular denoising diffusion: Gaussian diffusion on standardized continuous
//! columns, multinomial diffusion on categorical ones, one MLP denoiser.

mod checkpoint;
mod mlp;
mod model;
mod schedule;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use mlp::{Adam, DenoiserMlp};
pub use model::{batch_loss, loss_and_grad, loss_only, CategoricalMode, DiffusionModel, TrainBatch, TrainConfig};
pub use schedule::{q_sample_categorical_with, q_sample_with, time_embedding, NoiseSchedule, ScheduleKind};

use crate::data::DataError;

#[derive(Debug, thiserror::Error)]
pub enum DiffusionError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no training performed: epochs must be >= 1")]
    NoTraining,
    #[error("timestep {t} outside 1..={steps}")]
    TimestepOutOfRange { t: usize, steps: usize },
    #[error("input is not a probability vector")]
    NotAProbabilityVector,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("empty training data")]
    EmptyData,
    #[error("non-finite network output at reverse step {step}")]
    NonFiniteSample { step: usize },
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: String, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    CheckpointCorrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}
