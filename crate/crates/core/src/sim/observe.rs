//! Kinematic observation: one row for the ego, then the N nearest traffic
//! vehicles. Every entry is normalized into [-1, 1]; presence flags are
//! exactly 0 or 1.
//!
//! Row layout (5 features): presence, longitudinal, lateral, vx, vy.
//! The ego row uses absolute position/speed; neighbor rows are relative to
//! the ego (longitudinal deltas over 100 m, clipped).

use super::config::EnvConfig;
use super::env::{wrap_delta, EnvState};
use super::Observation;

/// Longitudinal normalization range for neighbor deltas, meters.
pub const RELATIVE_X_SCALE: f64 = 100.0;
/// Speed normalization for relative velocities, m/s.
pub const RELATIVE_V_SCALE: f64 = 30.0;

pub fn observe(cfg: &EnvConfig, state: &EnvState) -> Observation {
    let mut obs = vec![0.0; cfg.obs_dim()];
    let lat_scale = cfg.lanes as f64 * cfg.lane_width;
    let clip = |x: f64| x.clamp(-1.0, 1.0);

    let ego = &state.ego;
    let ego_lat = ego.lateral_pos(cfg);
    let ego_vy = ego.lateral_speed(cfg);
    obs[0] = 1.0;
    obs[1] = clip(ego.x / cfg.road_length);
    obs[2] = clip(ego_lat / lat_scale);
    obs[3] = clip(ego.speed / cfg.speed_max);
    obs[4] = clip(ego_vy / RELATIVE_V_SCALE);

    // nearest neighbors by wrapped longitudinal distance; ties break on
    // vehicle index so the ordering is deterministic
    let mut order: Vec<(usize, f64)> = state
        .traffic
        .iter()
        .enumerate()
        .map(|(i, v)| (i, wrap_delta(v.x - ego.x, cfg.road_length).abs()))
        .collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));

    for (slot, &(i, _)) in order.iter().take(cfg.neighbor_count).enumerate() {
        let v = &state.traffic[i];
        let base = (slot + 1) * 5;
        obs[base] = 1.0;
        obs[base + 1] = clip(wrap_delta(v.x - ego.x, cfg.road_length) / RELATIVE_X_SCALE);
        obs[base + 2] = clip((v.lateral_pos(cfg) - ego_lat) / lat_scale);
        obs[base + 3] = clip((v.speed - ego.speed) / RELATIVE_V_SCALE);
        obs[base + 4] = clip((v.lateral_speed(cfg) - ego_vy) / RELATIVE_V_SCALE);
    }
    obs
}
