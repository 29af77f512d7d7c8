//! Uncertainty-gated adaptive replanning.
//!
//! A diffusion model generates fixed-horizon state plans, a deep ensemble of
//! inverse-dynamics models turns planned states into discrete actions and
//! reports predictive entropy, and replanning is triggered only when that
//! entropy crosses a threshold. A built-in multi-lane traffic simulator and
//! offline-dataset generator make the whole pipeline reproducible on a
//! single desktop core.
//!
//! Module map:
//! - [`numerics`]: feed-forward nets, Adam, probability utilities, seedable RNG
//! - [`sim`]: the looped multi-lane driving environment with IDM traffic
//! - [`datagen`]: scripted behavior policy, offline dataset, normalization
//! - [`diffuser`]: DDPM over state windows, conditioned by inpainting
//! - [`invdyn`]: inverse-dynamics action ensemble and entropy
//! - [`planner`]: the adaptive replanning loop and its two baselines
//! - [`bench`]: seeded evaluation harness, threshold sweep, reports

pub mod bench;
pub mod datagen;
pub mod diffuser;
pub mod invdyn;
pub mod numerics;
pub mod planner;
pub mod sim;
pub mod testing;

/// Crate-wide error type; each module contributes a variant.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Data(#[from] datagen::DataError),
    #[error(transparent)]
    Diffuser(#[from] diffuser::DiffuserError),
    #[error(transparent)]
    Invdyn(#[from] invdyn::InvdynError),
    #[error(transparent)]
    Planner(#[from] planner::PlannerError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
