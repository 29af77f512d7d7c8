//! Scripted behavior policy: IDM speed keeping plus a MOBIL-style lane
//! change test, with epsilon-uniform exploration noise. This generates the
//! reward-labeled, deliberately sub-optimal trajectories the models train
//! on; episodes that end in collision are kept on purpose.

use crate::numerics::Rng;
use crate::sim::{
    follower_in_lane, idm_accel, idm_accel_with, idm_free_accel, leader_in_lane,
    Action, EnvConfig, EnvState, ACTION_COUNT, IDM_MAX_ACCEL,
};

/// Default exploration noise.
pub const DEFAULT_NOISE: f64 = 0.1;

/// Leader lookahead for the scripted driver, meters.
const LOOKAHEAD: f64 = 100.0;
/// IDM parameters of the scripted driver; it aims for the ego's top speed
/// with a shorter headway and a larger buffer than the traffic.
const EGO_TIME_HEADWAY: f64 = 1.0;
const EGO_MIN_GAP: f64 = 10.0;
const EGO_DECEL: f64 = 5.0;
/// Acceleration dead-band mapped to IDLE.
const ACCEL_BAND: f64 = 0.5;
/// MOBIL-style acceleration gain needed to change lanes.
const LANE_GAIN: f64 = 0.2;
/// A lane change is a rear conflict if it would force the new follower to
/// brake harder than this.
const SAFE_REAR_DECEL: f64 = -4.0;
/// Minimum physical clearance to even consider a target lane, meters.
const MIN_CLEARANCE: f64 = 2.0;

/// IDM acceleration the ego driver would realize in `lane`.
fn ego_accel_in_lane(cfg: &EnvConfig, state: &EnvState, lane: usize) -> f64 {
    let v = state.ego.speed;
    match leader_in_lane(cfg, state, state.ego.x, lane) {
        Some((gap, lead_speed)) if gap <= LOOKAHEAD => idm_accel_with(
            v,
            gap,
            lead_speed,
            cfg.speed_max,
            EGO_TIME_HEADWAY,
            EGO_MIN_GAP,
            IDM_MAX_ACCEL,
            EGO_DECEL,
        ),
        _ => idm_free_accel(v, cfg.speed_max, IDM_MAX_ACCEL),
    }
}

fn lane_change_candidate(cfg: &EnvConfig, state: &EnvState, target: usize, a_keep: f64) -> Option<f64> {
    let x = state.ego.x;
    if let Some((gap, _)) = leader_in_lane(cfg, state, x, target) {
        if gap < MIN_CLEARANCE {
            return None;
        }
    }
    if let Some((gap, rear_speed)) = follower_in_lane(cfg, state, x, target) {
        if gap < MIN_CLEARANCE {
            return None;
        }
        // rear conflict: the follower would have to brake too hard
        if idm_accel(rear_speed, gap, state.ego.speed) < SAFE_REAR_DECEL {
            return None;
        }
    }
    let gain = ego_accel_in_lane(cfg, state, target) - a_keep;
    (gain > LANE_GAIN).then_some(gain)
}

/// The deterministic scripted expert (no exploration noise).
pub fn expert_action(cfg: &EnvConfig, state: &EnvState) -> Action {
    let ego = &state.ego;
    let a_keep = ego_accel_in_lane(cfg, state, ego.lane);

    if ego.lane_change.is_none() {
        let left = ego
            .lane
            .checked_sub(1)
            .and_then(|t| lane_change_candidate(cfg, state, t, a_keep));
        let right = (ego.lane + 1 < cfg.lanes)
            .then(|| lane_change_candidate(cfg, state, ego.lane + 1, a_keep))
            .flatten();
        match (left, right) {
            (Some(l), Some(r)) => {
                return if l >= r { Action::LaneLeft } else { Action::LaneRight };
            }
            (Some(_), None) => return Action::LaneLeft,
            (None, Some(_)) => return Action::LaneRight,
            (None, None) => {}
        }
    }

    if a_keep > ACCEL_BAND && ego.speed < cfg.speed_max {
        Action::Faster
    } else if a_keep < -ACCEL_BAND && ego.speed > cfg.speed_min {
        Action::Slower
    } else {
        Action::Idle
    }
}

/// Scripted expert with probability `1 - noise`, uniform random action with
/// probability `noise`.
pub fn behavior_action(cfg: &EnvConfig, state: &EnvState, rng: &mut Rng, noise: f64) -> Action {
    if noise > 0.0 && rng.chance(noise) {
        Action::from_id(rng.index(ACTION_COUNT)).expect("action ids are dense")
    } else {
        expert_action(cfg, state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{reset, TerminalCause, Vehicle};

    fn lone_ego(_cfg: &EnvConfig, speed: f64) -> EnvState {
        EnvState {
            ego: Vehicle::new(100.0, 1, speed),
            traffic: vec![],
            step: 0,
            done: false,
            cause: TerminalCause::Running,
            seed: 0,
        }
    }

    #[test]
    fn free_road_below_top_speed_accelerates() {
        let cfg = EnvConfig::default();
        for speed in [10.0, 17.5, 25.0, 27.5] {
            let state = lone_ego(&cfg, speed);
            assert_eq!(expert_action(&cfg, &state), Action::Faster, "at {speed}");
        }
    }

    #[test]
    fn distant_leader_beyond_lookahead_is_ignored() {
        let cfg = EnvConfig::default();
        let mut state = lone_ego(&cfg, 20.0);
        state.traffic.push(Vehicle::new(100.0 + 150.0, 1, 15.0));
        assert_eq!(expert_action(&cfg, &state), Action::Faster);
    }

    #[test]
    fn close_closing_leader_brakes() {
        let cfg = EnvConfig::default();
        let mut state = lone_ego(&cfg, 20.0);
        // bumper gap 14 - 5 = 9 m < the 10 m buffer, leader slower
        state.traffic.push(Vehicle::new(114.0, 1, 15.0));
        // block both adjacent lanes so no escape by lane change
        state.traffic.push(Vehicle::new(102.0, 0, 15.0));
        state.traffic.push(Vehicle::new(102.0, 2, 15.0));
        assert_eq!(expert_action(&cfg, &state), Action::Slower);
    }

    #[test]
    fn blocked_lane_triggers_lane_change() {
        let cfg = EnvConfig::default();
        let mut state = lone_ego(&cfg, 20.0);
        // slow leader 40 m ahead in the ego lane, adjacent lanes empty
        state.traffic.push(Vehicle::new(140.0, 1, 12.0));
        let a = expert_action(&cfg, &state);
        assert!(
            a == Action::LaneLeft || a == Action::LaneRight,
            "expected a lane change, got {a:?}"
        );
    }

    #[test]
    fn pure_noise_is_empirically_uniform() {
        let cfg = EnvConfig::default();
        let (state, _) = reset(&cfg, 1).unwrap();
        let mut rng = Rng::new(42);
        let n = 100_000;
        let mut counts = [0usize; ACTION_COUNT];
        for _ in 0..n {
            counts[behavior_action(&cfg, &state, &mut rng, 1.0).id()] += 1;
        }
        // 3 sigma band around n/5 under a binomial(n, 1/5)
        let expected = n as f64 / ACTION_COUNT as f64;
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 3.0 * sigma,
                "action {i} count {c} outside 3 sigma of {expected}"
            );
        }
    }

    #[test]
    fn zero_noise_is_deterministic() {
        let cfg = EnvConfig::default();
        let (state, _) = reset(&cfg, 9).unwrap();
        let mut r1 = Rng::new(0);
        let mut r2 = Rng::new(99);
        assert_eq!(
            behavior_action(&cfg, &state, &mut r1, 0.0),
            behavior_action(&cfg, &state, &mut r2, 0.0)
        );
    }
}
