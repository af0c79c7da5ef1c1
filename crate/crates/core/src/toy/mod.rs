//! A pocket-sized attention stack that makes the MAS hinge a live training
//! signal: two layers, four heads, manual analytic gradients, and a
//! finite-difference harness to keep the backward pass honest. Also home to
//! the closed-form probe-capacity calculator.

mod checkpoint;
mod gradcheck;
mod model;
mod probe;
mod train;

pub use checkpoint::{
    load_model, read_trajectory, save_model, write_json_pretty, write_trajectory,
};
pub use gradcheck::{finite_diff_check, FdReport};
pub use model::{
    embed_index, forward, loss_and_grads, w_cls_index, wk_index, wq_index, LossBreakdown,
    ToyModel, D_MODEL, HEAD_DIM, N_CLASSES, N_HEADS, N_LAYERS, N_PARAMS, TOKEN_ANSWER,
    TOKEN_EMPTY, TOKEN_OCCUPIED, TOY_GRID_DIM, VISUAL_TOKENS, VOCAB,
};
pub use probe::{probe_param_count, ProbeError, ProbeParams, ProbeSpec};
pub use train::{
    eval_loss, make_counting_dataset, synthetic_batch, text_sink_model, text_token, train,
    ToySample, TrajectoryPoint, COUNT_CLASS_MIN,
};

use thiserror::Error;

use crate::scene::SceneError;

#[derive(Debug, Error)]
pub enum ToyError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("bad sample: {0}")]
    BadSample(String),
    #[error("bad config: {0}")]
    Config(String),
    #[error("epsilon {0} outside [1e-7, 1e-3]")]
    InvalidEpsilon(f64),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: u32, loss: f64 },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
}
