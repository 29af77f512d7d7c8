//! Vehicle kinematics shared by the ego and traffic.

use serde::{Deserialize, Serialize};

use super::config::EnvConfig;

/// An in-progress lane change. Maneuvers take [`LANE_CHANGE_STEPS`] steps of
/// linear lateral interpolation; the vehicle keeps its source lane index
/// until the maneuver completes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChange {
    pub target: usize,
    /// Fraction of the maneuver completed, in [0, 1].
    pub progress: f64,
}

pub const LANE_CHANGE_STEPS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    /// Longitudinal position in meters, modulo the road length.
    pub x: f64,
    /// Current (source) lane index.
    pub lane: usize,
    /// Lateral offset from the lane center, meters; nonzero only while a
    /// lane change is in progress.
    pub lateral: f64,
    /// Longitudinal speed, m/s.
    pub speed: f64,
    pub lane_change: Option<LaneChange>,
}

impl Vehicle {
    pub fn new(x: f64, lane: usize, speed: f64) -> Self {
        Vehicle {
            x,
            lane,
            lateral: 0.0,
            speed,
            lane_change: None,
        }
    }

    /// Absolute lateral position, meters from the left road edge.
    pub fn lateral_pos(&self, cfg: &EnvConfig) -> f64 {
        cfg.lane_center(self.lane) + self.lateral
    }

    /// Lateral velocity in m/s (nonzero only during a lane change).
    pub fn lateral_speed(&self, cfg: &EnvConfig) -> f64 {
        match self.lane_change {
            Some(lc) => {
                let span = cfg.lane_center(lc.target) - cfg.lane_center(self.lane);
                span / (LANE_CHANGE_STEPS as f64 * cfg.dt)
            }
            None => 0.0,
        }
    }

    /// Lanes this vehicle currently occupies for gap computations: its own
    /// lane, plus the target while changing.
    pub fn occupies(&self, lane: usize) -> bool {
        self.lane == lane || self.lane_change.map_or(false, |lc| lc.target == lane)
    }

    pub fn start_lane_change(&mut self, target: usize) {
        self.lane_change = Some(LaneChange {
            target,
            progress: 0.0,
        });
    }

    /// Advances the lateral interpolation by one step; commits the lane
    /// switch at full progress.
    pub fn advance_lane_change(&mut self, cfg: &EnvConfig) {
        if let Some(mut lc) = self.lane_change {
            lc.progress += 1.0 / LANE_CHANGE_STEPS as f64;
            if lc.progress >= 1.0 - 1e-12 {
                self.lane = lc.target;
                self.lateral = 0.0;
                self.lane_change = None;
            } else {
                let span = cfg.lane_center(lc.target) - cfg.lane_center(self.lane);
                self.lateral = span * lc.progress;
                self.lane_change = Some(lc);
            }
        }
    }
}
