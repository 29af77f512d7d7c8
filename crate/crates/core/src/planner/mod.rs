//! Uncertainty-gated adaptive replanning, with the two baselines expressed
//! as threshold extremes: continuous replanning is ε = −∞ (the execution
//! loop never survives its gate) and no-replan is ε = +∞ (every plan runs
//! to buffer exhaustion).
//!
//! One episode under this policy:
//! 1. plan at the observed state, predict the first action from
//!    (observed, planned-next) and execute it unconditionally;
//! 2. at plan ages 1..H−2: overwrite the current plan slot with the
//!    observed state, predict from (observed, planned-next); execute while
//!    the predictive entropy stays below ε, otherwise replan at once;
//! 3. replan when H−1 actions have been taken (the buffer is exhausted).
//!
//! The (observed, planned) pairing is the collision-detection mechanism:
//! when reality diverges from the plan, the inverse dynamics between
//! observed and planned states turns ambiguous and the entropy rises.

use serde::{Deserialize, Serialize};

use crate::diffuser::{sample_plan, DenoiserModel, NfeMeter, NoiseSchedule, PlanBuffer};
use crate::invdyn::{Ensemble, EnsemblePrediction};
use crate::numerics::Rng;
use crate::sim::{self, Action, EnvConfig, TerminalCause};

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("adaptive mode needs a finite threshold >= 0, got {epsilon}")]
    BadEpsilon { epsilon: f64 },
    #[error("{what} dimension mismatch: environment emits {env}, model expects {model}")]
    DimensionMismatch {
        what: &'static str,
        env: usize,
        model: usize,
    },
    #[error("plan age {age} outside 1..={max}")]
    PlanAgeOutOfRange { age: usize, max: usize },
    #[error("planner needs a horizon of at least 2, got {horizon}")]
    BadHorizon { horizon: usize },
}

/// Replanning policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Replan when predictive entropy reaches the threshold.
    Adaptive,
    /// Replan at every step.
    Continuous,
    /// Replan only at buffer exhaustion.
    NoReplan,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Adaptive => "adaptive",
            Mode::Continuous => "continuous",
            Mode::NoReplan => "no_replan",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub mode: Mode,
    /// Replanning threshold in nats; only meaningful in adaptive mode.
    pub epsilon: f64,
}

impl PlannerConfig {
    pub fn adaptive(epsilon: f64) -> Self {
        PlannerConfig {
            mode: Mode::Adaptive,
            epsilon,
        }
    }

    pub fn continuous() -> Self {
        PlannerConfig {
            mode: Mode::Continuous,
            epsilon: f64::NEG_INFINITY,
        }
    }

    pub fn no_replan() -> Self {
        PlannerConfig {
            mode: Mode::NoReplan,
            epsilon: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.mode == Mode::Adaptive && !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(PlannerError::BadEpsilon {
                epsilon: self.epsilon,
            });
        }
        Ok(())
    }

    /// The threshold the execution gate actually compares against.
    pub fn effective_epsilon(&self) -> f64 {
        match self.mode {
            Mode::Adaptive => self.epsilon,
            Mode::Continuous => f64::NEG_INFINITY,
            Mode::NoReplan => f64::INFINITY,
        }
    }
}

/// Source of fixed-horizon state plans.
pub trait PlanProvider {
    fn horizon(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// Denoiser evaluations consumed per plan.
    fn nfe_per_plan(&self) -> u64;
    fn plan(
        &self,
        observation: &[f64],
        rng: &mut Rng,
        meter: &mut NfeMeter,
    ) -> crate::Result<PlanBuffer>;
}

/// Predicts the action (and its uncertainty) between two states.
pub trait ActionOracle {
    fn state_dim(&self) -> usize;
    fn predict(&self, s: &[f64], s_next: &[f64]) -> crate::Result<EnsemblePrediction>;
}

/// A trained diffusion model plus its schedule, usable as a plan source.
pub struct DiffusionPlanner<'a> {
    pub model: &'a DenoiserModel,
    pub schedule: &'a NoiseSchedule,
}

impl PlanProvider for DiffusionPlanner<'_> {
    fn horizon(&self) -> usize {
        self.model.horizon
    }

    fn state_dim(&self) -> usize {
        self.model.state_dim
    }

    fn nfe_per_plan(&self) -> u64 {
        self.schedule.steps() as u64
    }

    fn plan(
        &self,
        observation: &[f64],
        rng: &mut Rng,
        meter: &mut NfeMeter,
    ) -> crate::Result<PlanBuffer> {
        Ok(sample_plan(self.model, self.schedule, observation, rng, meter)?)
    }
}

impl ActionOracle for Ensemble {
    fn state_dim(&self) -> usize {
        Ensemble::state_dim(self)
    }

    fn predict(&self, s: &[f64], s_next: &[f64]) -> crate::Result<EnsemblePrediction> {
        Ok(Ensemble::predict(self, s, s_next)?)
    }
}

/// One executed step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub action: Action,
    pub reward: f64,
    /// Entropy of the prediction whose action was executed.
    pub entropy: f64,
    /// Age of the plan the action came from; 0 right after (re)planning.
    pub plan_age: usize,
    /// True exactly at steps where a new plan was created.
    pub replanned: bool,
    /// Normalized ego speed after the step, for the high-speed metric.
    pub speed_frac: f64,
}

/// Full record of one episode; the source of every reported metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub mode: Mode,
    pub epsilon: f64,
    pub steps: Vec<StepRecord>,
    pub plan_count: usize,
    /// Total denoiser evaluations: plan_count × K.
    pub nfe: u64,
    pub cause: TerminalCause,
    pub episode_return: f64,
    pub length: usize,
}

impl EpisodeLog {
    pub fn collided(&self) -> bool {
        self.cause == TerminalCause::Collision
    }
}

/// Percentage of would-be per-step replans avoided on this rollout:
/// 1 − plan_count/length, in percent. Since each plan costs K denoiser
/// evaluations this equals 1 − NFE/(length·K).
pub fn saved_nfe(log: &EpisodeLog) -> f64 {
    assert!(log.length >= 1, "episode must contain at least one step");
    100.0 * (1.0 - log.plan_count as f64 / log.length as f64)
}

/// The grounded-buffer prediction: pairs the observed state with plan slot
/// i+1. Valid at plan ages 1..=H−2.
pub fn act_from_plan(
    oracle: &impl ActionOracle,
    observed: &[f64],
    plan: &PlanBuffer,
    age: usize,
) -> crate::Result<(Action, f64)> {
    let h = plan.horizon();
    if age < 1 || age + 2 > h {
        return Err(PlannerError::PlanAgeOutOfRange {
            age,
            max: h.saturating_sub(2),
        }
        .into());
    }
    let pred = oracle.predict(observed, plan.state(age + 1))?;
    Ok((pred.action, pred.entropy))
}

/// Runs one full episode of the adaptive policy (or a baseline) and logs
/// every step. Episodes are deterministic given (seed, models, config).
pub fn run_episode(
    cfg: &EnvConfig,
    plans: &impl PlanProvider,
    oracle: &impl ActionOracle,
    planner: &PlannerConfig,
    seed: u64,
) -> crate::Result<EpisodeLog> {
    planner.validate()?;
    let h = plans.horizon();
    if h < 2 {
        return Err(PlannerError::BadHorizon { horizon: h }.into());
    }
    if plans.state_dim() != cfg.obs_dim() {
        return Err(PlannerError::DimensionMismatch {
            what: "plan model",
            env: cfg.obs_dim(),
            model: plans.state_dim(),
        }
        .into());
    }
    if oracle.state_dim() != cfg.obs_dim() {
        return Err(PlannerError::DimensionMismatch {
            what: "action ensemble",
            env: cfg.obs_dim(),
            model: oracle.state_dim(),
        }
        .into());
    }

    let epsilon = planner.effective_epsilon();
    let (mut state, mut obs) = sim::reset(cfg, seed)?;
    let mut rng = Rng::new(seed).split(0x504c414e); // planner noise stream
    let mut meter = NfeMeter::default();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut plan_count = 0usize;
    let mut episode_return = 0.0;

    'episode: while !state.done {
        let mut plan = plans.plan(&obs, &mut rng, &mut meter)?;
        plan.created_at = state.step;
        plan_count += 1;

        // the first action of a fresh plan executes unconditionally
        let pred = oracle.predict(&obs, plan.state(1))?;
        let out = sim::step(cfg, &state, pred.action)?;
        episode_return += out.reward;
        steps.push(StepRecord {
            t: state.step,
            action: pred.action,
            reward: out.reward,
            entropy: pred.entropy,
            plan_age: 0,
            replanned: true,
            speed_frac: sim::speed_fraction(cfg, &out.state),
        });
        state = out.state;
        obs = out.obs;
        if state.done {
            break 'episode;
        }

        // execute from the buffer while the uncertainty gate holds
        for age in 1..h - 1 {
            plan.ground(age, &obs);
            let pred = oracle.predict(&obs, plan.state(age + 1))?;
            if !(pred.entropy < epsilon) {
                continue 'episode; // replan (a NaN entropy also lands here)
            }
            let out = sim::step(cfg, &state, pred.action)?;
            episode_return += out.reward;
            steps.push(StepRecord {
                t: state.step,
                action: pred.action,
                reward: out.reward,
                entropy: pred.entropy,
                plan_age: age,
                replanned: false,
                speed_frac: sim::speed_fraction(cfg, &out.state),
            });
            state = out.state;
            obs = out.obs;
            if state.done {
                break 'episode;
            }
        }
        // buffer exhausted: fall through to a replan
    }

    let length = steps.len();
    Ok(EpisodeLog {
        seed,
        mode: planner.mode,
        epsilon: planner.epsilon,
        steps,
        plan_count,
        nfe: meter.evaluations,
        cause: state.cause,
        episode_return,
        length,
    })
}
