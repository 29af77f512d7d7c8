//! Offline dataset generation with a scripted behavior policy, plus
//! normalization statistics and training-window sampling.

mod behavior;
mod dataset;
mod norm;
mod windows;

pub use behavior::{behavior_action, expert_action, DEFAULT_NOISE};
pub use dataset::{Dataset, DatasetHeader, Transition, DATASET_KIND};
pub use norm::{norm_stats, NormStats, STD_FLOOR};
pub use windows::{all_windows, sample_windows, window_count, TrainWindow};

use crate::numerics::{mix, Rng};
use crate::sim::{self, EnvConfig, EnvState};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("episode with {len} transitions is too short; need at least 2")]
    EpisodeTooShort { len: usize },
    #[error("observation dimension mismatch: expected {expected}, got {got}")]
    ObsDimMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("window horizon must be at least 2, got {h}")]
    BadHorizon { h: usize },
    #[error("no episode long enough for a horizon-{h} window")]
    NoWindow { h: usize },
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("io error on {0}: {1}")]
    Io(std::path::PathBuf, String),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
}

/// Rolls episodes with an arbitrary policy until the step budget is met.
/// Episodes are seeded from (seed, episode index), so collection is
/// deterministic and could be sharded by episode without changing the
/// result. Collision-terminated episodes are kept; the rare episode with
/// fewer than 2 transitions is discarded and does not count toward the
/// budget.
pub fn collect_with<P>(
    cfg: &EnvConfig,
    mut policy: P,
    total_steps: usize,
    seed: u64,
) -> Result<Dataset, DataError>
where
    P: FnMut(&EnvConfig, &EnvState, &mut Rng) -> sim::Action,
{
    cfg.validate()?;
    let mut dataset = Dataset::new(cfg.obs_dim());
    let mut episode_index = 0u64;
    while dataset.len() < total_steps {
        let env_seed = mix(seed, episode_index * 2);
        let mut policy_rng = Rng::new(mix(seed, episode_index * 2 + 1));
        episode_index += 1;

        let (mut state, mut obs) = sim::reset(cfg, env_seed)?;
        let mut steps: Vec<Transition> = Vec::new();
        while !state.done {
            let action = policy(cfg, &state, &mut policy_rng);
            let out = sim::step(cfg, &state, action)?;
            steps.push(Transition {
                obs: std::mem::take(&mut obs),
                action,
                reward: out.reward,
                next_obs: out.obs.clone(),
                done: out.done,
                episode: 0,
                step: 0,
            });
            state = out.state;
            obs = out.obs;
        }
        if steps.len() >= 2 {
            dataset.push_episode(steps)?;
        }
    }
    Ok(dataset)
}

/// Collects a dataset with the scripted behavior policy at the given
/// exploration noise.
pub fn collect(
    cfg: &EnvConfig,
    noise: f64,
    total_steps: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    collect_with(
        cfg,
        |cfg, state, rng| behavior_action(cfg, state, rng, noise),
        total_steps,
        seed,
    )
}
