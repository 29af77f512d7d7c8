//! Deterministic stub models for harness and trace tests: a plan source
//! that repeats the current observation and an action oracle driven by a
//! pure function. These let the replanning loop be exercised without any
//! trained model.

use crate::diffuser::{NfeMeter, PlanBuffer};
use crate::invdyn::EnsemblePrediction;
use crate::numerics::Rng;
use crate::planner::{ActionOracle, PlanProvider};
use crate::sim::{Action, ACTION_COUNT};

/// Plan source whose plans are H copies of the conditioning observation.
/// Each plan charges `nfe_per_plan` evaluations to the meter, mirroring the
/// real sampler's accounting.
#[derive(Debug, Clone)]
pub struct StaticPlans {
    horizon: usize,
    state_dim: usize,
    nfe_per_plan: u64,
}

impl StaticPlans {
    pub fn new(horizon: usize, state_dim: usize, nfe_per_plan: u64) -> Self {
        StaticPlans {
            horizon,
            state_dim,
            nfe_per_plan,
        }
    }
}

impl PlanProvider for StaticPlans {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn nfe_per_plan(&self) -> u64 {
        self.nfe_per_plan
    }

    fn plan(
        &self,
        observation: &[f64],
        _rng: &mut Rng,
        meter: &mut NfeMeter,
    ) -> crate::Result<PlanBuffer> {
        meter.evaluations += self.nfe_per_plan;
        Ok(PlanBuffer::new(vec![
            observation.to_vec();
            self.horizon
        ]))
    }
}

/// Action oracle computed by a pure function of the state pair, returning
/// (action, entropy). The advertised probability vector is one-hot on the
/// action; trace tests only read the action and entropy.
pub struct FnOracle<F> {
    state_dim: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&[f64], &[f64]) -> (Action, f64),
{
    pub fn new(state_dim: usize, f: F) -> Self {
        FnOracle { state_dim, f }
    }
}

impl<F> ActionOracle for FnOracle<F>
where
    F: Fn(&[f64], &[f64]) -> (Action, f64),
{
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn predict(&self, s: &[f64], s_next: &[f64]) -> crate::Result<EnsemblePrediction> {
        let (action, entropy) = (self.f)(s, s_next);
        let mut probabilities = vec![0.0; ACTION_COUNT];
        probabilities[action.id()] = 1.0;
        Ok(EnsemblePrediction {
            probabilities,
            entropy,
            action,
        })
    }
}
