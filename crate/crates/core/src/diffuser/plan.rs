//! The plan buffer: H denormalized planned states plus a cursor.

use serde::{Deserialize, Serialize};

/// A generated plan of H future states in raw observation space. The first
/// state always equals the conditioning observation exactly. As execution
/// proceeds, consumed slots are overwritten with observed states
/// ([`PlanBuffer::ground`]) so downstream action prediction sees plan/reality
/// divergence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanBuffer {
    pub states: Vec<Vec<f64>>,
    /// Index of the most recently grounded slot.
    pub cursor: usize,
    /// Environment step at which this plan was created.
    pub created_at: usize,
}

impl PlanBuffer {
    pub fn new(states: Vec<Vec<f64>>) -> Self {
        PlanBuffer {
            states,
            cursor: 0,
            created_at: 0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    /// Overwrites slot `i` with the observed state and moves the cursor.
    pub fn ground(&mut self, i: usize, observed: &[f64]) {
        self.states[i].copy_from_slice(observed);
        self.cursor = i;
    }
}
