//! Denoising diffusion over fixed-horizon state windows, conditioned on the
//! current observation by inpainting the first slot during the reverse
//! process.
//!
//! A trained [`DenoiserModel`] is immutable; concurrent samplers need only
//! their own [`Rng`](crate::numerics::Rng) split and [`NfeMeter`].

mod model;
mod plan;
mod schedule;

pub use model::{
    load_denoiser, meta_path, sample_plan, save_denoiser, time_embedding, train_denoiser,
    train_step, DenoiserMeta, DenoiserModel, NfeMeter, SAMPLE_CLIP,
};
pub use plan::PlanBuffer;
pub use schedule::{build_schedule, q_sample, NoiseSchedule};

use crate::numerics::NumericsError;

#[derive(Debug, thiserror::Error)]
pub enum DiffuserError {
    #[error("a noise schedule needs at least 2 steps, got {steps}")]
    BadSteps { steps: usize },
    #[error("diffusion step {k} outside 1..={steps}")]
    BadStepIndex { k: usize, steps: usize },
    #[error("plan horizon must be at least 2, got {horizon}")]
    BadHorizon { horizon: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("empty training batch")]
    EmptyBatch,
    #[error("denoiser produced non-finite values; the model is untrained or corrupted")]
    NonFiniteModel,
    #[error("io error on {0}: {1}")]
    Io(std::path::PathBuf, String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] crate::datagen::DataError),
}
