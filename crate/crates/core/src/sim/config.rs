//! Environment configuration, loadable from JSON with every field optional.

use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EnvConfig {
    /// Number of lanes; lane 0 is the leftmost.
    pub lanes: usize,
    /// Lane width in meters.
    pub lane_width: f64,
    /// Road length in meters; positions wrap modulo this, so traffic never
    /// drains out of the scene.
    pub road_length: f64,
    /// Number of traffic vehicles.
    pub traffic_count: usize,
    /// Maximum episode length in steps.
    pub max_steps: usize,
    /// Ego speed range in m/s.
    pub speed_min: f64,
    pub speed_max: f64,
    /// Speed change per FASTER/SLOWER action, m/s.
    pub speed_increment: f64,
    /// Simulation timestep in seconds.
    pub dt: f64,
    /// Number of nearest traffic vehicles in the observation.
    pub neighbor_count: usize,
    /// Reward weights for the speed and right-lane terms.
    pub reward_speed_weight: f64,
    pub reward_right_weight: f64,
    /// Per-step probability that a traffic vehicle attempts a lane change.
    pub traffic_lane_change_prob: f64,
    /// Vehicle footprint in meters.
    pub vehicle_length: f64,
    pub vehicle_width: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            lanes: 4,
            lane_width: 4.0,
            road_length: 1000.0,
            traffic_count: 20,
            max_steps: 100,
            speed_min: 10.0,
            speed_max: 30.0,
            speed_increment: 2.5,
            dt: 0.5,
            neighbor_count: 6,
            reward_speed_weight: 0.8,
            reward_right_weight: 0.2,
            traffic_lane_change_prob: 0.01,
            vehicle_length: 5.0,
            vehicle_width: 2.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.lanes < 2 {
            return Err(SimError::InvalidConfig("need at least 2 lanes".into()));
        }
        if self.speed_min >= self.speed_max {
            return Err(SimError::InvalidConfig(
                "speed_min must be below speed_max".into(),
            ));
        }
        let extents = [
            self.lane_width,
            self.road_length,
            self.speed_increment,
            self.dt,
            self.vehicle_length,
            self.vehicle_width,
        ];
        if extents.iter().any(|&x| x <= 0.0) {
            return Err(SimError::InvalidConfig(
                "all geometric extents must be positive".into(),
            ));
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Observation dimension: (neighbors + ego) × 5 features.
    pub fn obs_dim(&self) -> usize {
        (self.neighbor_count + 1) * 5
    }

    /// Lateral position of a lane center, meters from the left road edge.
    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }

    /// How many vehicles fit on the road with spawn clearance.
    pub fn capacity(&self) -> usize {
        self.lanes * (self.road_length / (self.vehicle_length + super::SPAWN_GAP)) as usize
    }
}
