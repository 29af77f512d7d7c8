//! Deterministic, seedable multi-lane driving simulator with moving IDM
//! traffic on a looped road.
//!
//! [`EnvState`] is a plain value and [`step`] is a pure transition given
//! (state, action); episodes can run concurrently, each owning its state.

mod config;
mod env;
mod idm;
mod observe;
mod vehicle;

pub use config::EnvConfig;
pub use env::{
    check_collision, ego_leader, follower_in_lane, leader_in_lane, reset, speed_fraction, step,
    trace_episode, wrap_delta, Action, EnvState, StepOutcome, TerminalCause, TraceRow,
    ACTION_COUNT, SPAWN_GAP,
};
pub use idm::{
    idm_accel, idm_accel_with, idm_free_accel, IDM_COMFORT_DECEL, IDM_DESIRED_SPEED, IDM_MAX_ACCEL,
    IDM_MIN_GAP, IDM_TIME_HEADWAY,
};
pub use observe::{observe, RELATIVE_V_SCALE, RELATIVE_X_SCALE};
pub use vehicle::{LaneChange, Vehicle, LANE_CHANGE_STEPS};

/// Normalized kinematic feature vector of the ego and its nearest
/// neighbors; the state consumed by every model.
pub type Observation = Vec<f64>;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("cannot place {requested} traffic vehicles; road capacity is {capacity}")]
    Capacity { requested: usize, capacity: usize },
    #[error("cannot step a terminal episode")]
    TerminalStep,
    #[error("unknown action id {id}")]
    BadActionId { id: usize },
}
