//! Differentiable feed-forward networks, an adaptive-moment optimizer,
//! probability utilities, and seedable randomness. Everything runs on 64-bit
//! reals; at desk scale the 32-bit savings are irrelevant and gradient
//! checks are cleaner.
//!
//! Trained parameters are immutable values: forward passes are read-only
//! and safe to share across threads. Training is single-writer per model.

mod adam;
mod checkpoint;
mod gradcheck;
mod matrix;
mod net;
mod prob;
mod rng;

pub use adam::{train_step, OptimState};
pub use checkpoint::{load_net, save_net, CHECKPOINT_MAGIC};
pub use gradcheck::{grad_check, FD_STEP};
pub use matrix::{dot, Mat};
pub use net::{
    backward, forward, forward_batch, forward_cached, Activation, ForwardCache, NetParams,
    NetSpec, OutputHead,
};
pub use prob::{cross_entropy, softmax, PROB_FLOOR};
pub use rng::{hash_unit, mix, splitmix64, Rng};

#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite parameter at flat index {index}")]
    NonFiniteParam { index: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty input to {0}")]
    EmptyInput(&'static str),
    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("io error on {0}: {1}")]
    Io(std::path::PathBuf, String),
    #[error("bad checkpoint {0}: {1}")]
    BadCheckpoint(std::path::PathBuf, String),
}
