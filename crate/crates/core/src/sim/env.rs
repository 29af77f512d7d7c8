//! Environment state and transition function.
//!
//! The per-step order is fixed: ego meta-action, traffic lane-change
//! decisions, traffic IDM accelerations, longitudinal integration, lateral
//! interpolation, wrap, collision check, reward. Traffic lane-change draws
//! are a pure function of (episode seed, vehicle id, step), so traffic
//! behaves identically across policies sharing a seed until the ego itself
//! perturbs it.

use serde::{Deserialize, Serialize};

use crate::numerics::{hash_unit, Rng};

use super::config::EnvConfig;
use super::idm::{idm_accel, IDM_DESIRED_SPEED};
use super::observe::observe;
use super::vehicle::Vehicle;
use super::{Observation, SimError};

/// Required bumper-to-bumper clearance when spawning traffic.
pub const SPAWN_GAP: f64 = 15.0;

/// Clearance (ahead and behind, bumper-to-bumper) a traffic vehicle needs
/// in the target lane before starting a random lane change.
const TRAFFIC_LC_CLEARANCE: f64 = 12.0;

/// Discrete meta-actions. Ids are stable across every module and file
/// format, and the serialized form is the integer id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "usize", try_from = "usize")]
pub enum Action {
    LaneLeft,
    Idle,
    LaneRight,
    Faster,
    Slower,
}

pub const ACTION_COUNT: usize = 5;

impl Action {
    pub const ALL: [Action; ACTION_COUNT] = [
        Action::LaneLeft,
        Action::Idle,
        Action::LaneRight,
        Action::Faster,
        Action::Slower,
    ];

    pub fn id(self) -> usize {
        match self {
            Action::LaneLeft => 0,
            Action::Idle => 1,
            Action::LaneRight => 2,
            Action::Faster => 3,
            Action::Slower => 4,
        }
    }

    pub fn from_id(id: usize) -> Result<Action, SimError> {
        Action::ALL
            .get(id)
            .copied()
            .ok_or(SimError::BadActionId { id })
    }
}

impl From<Action> for usize {
    fn from(a: Action) -> usize {
        a.id()
    }
}

impl TryFrom<usize> for Action {
    type Error = String;

    fn try_from(id: usize) -> Result<Action, String> {
        Action::from_id(id).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalCause {
    Running,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub ego: Vehicle,
    pub traffic: Vec<Vehicle>,
    pub step: usize,
    pub done: bool,
    pub cause: TerminalCause,
    /// Episode seed; drives the stateless traffic lane-change draws.
    pub seed: u64,
}

pub struct StepOutcome {
    pub state: EnvState,
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub cause: TerminalCause,
}

/// Wraps a longitudinal delta onto [-road/2, road/2).
pub fn wrap_delta(dx: f64, road_length: f64) -> f64 {
    (dx + road_length / 2.0).rem_euclid(road_length) - road_length / 2.0
}

/// Creates a fresh episode. The ego starts in a random lane at the midpoint
/// speed; traffic is placed with at least [`SPAWN_GAP`] clearance.
pub fn reset(cfg: &EnvConfig, seed: u64) -> Result<(EnvState, Observation), SimError> {
    cfg.validate()?;
    if cfg.traffic_count > cfg.capacity() {
        return Err(SimError::Capacity {
            requested: cfg.traffic_count,
            capacity: cfg.capacity(),
        });
    }
    let mut rng = Rng::new(seed);
    let ego = Vehicle::new(
        rng.uniform(0.0, cfg.road_length),
        rng.index(cfg.lanes),
        (cfg.speed_min + cfg.speed_max) / 2.0,
    );

    let mut traffic: Vec<Vehicle> = Vec::with_capacity(cfg.traffic_count);
    let min_center_gap = cfg.vehicle_length + SPAWN_GAP;
    for _ in 0..cfg.traffic_count {
        let mut placed = false;
        for _ in 0..1000 {
            let lane = rng.index(cfg.lanes);
            let x = rng.uniform(0.0, cfg.road_length);
            let clear = std::iter::once(&ego)
                .chain(traffic.iter())
                .filter(|v| v.lane == lane)
                .all(|v| wrap_delta(v.x - x, cfg.road_length).abs() >= min_center_gap);
            if clear {
                let speed = rng.uniform(0.8 * IDM_DESIRED_SPEED, IDM_DESIRED_SPEED);
                traffic.push(Vehicle::new(x, lane, speed));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::Capacity {
                requested: cfg.traffic_count,
                capacity: cfg.capacity(),
            });
        }
    }

    let state = EnvState {
        ego,
        traffic,
        step: 0,
        done: false,
        cause: TerminalCause::Running,
        seed,
    };
    let obs = observe(cfg, &state);
    Ok((state, obs))
}

fn vehicles_of(state: &EnvState) -> impl Iterator<Item = &Vehicle> {
    std::iter::once(&state.ego).chain(state.traffic.iter())
}

/// Nearest vehicle ahead of (`x`, `lane`), as (bumper gap, its speed).
/// A vehicle at exactly `x` (the follower itself) is never a leader.
pub fn leader_in_lane(cfg: &EnvConfig, state: &EnvState, x: f64, lane: usize) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for v in vehicles_of(state) {
        if !v.occupies(lane) {
            continue;
        }
        let dx = wrap_delta(v.x - x, cfg.road_length);
        if dx <= 0.0 {
            continue;
        }
        let gap = dx - cfg.vehicle_length;
        if best.map_or(true, |(g, _)| gap < g) {
            best = Some((gap, v.speed));
        }
    }
    best
}

/// Nearest vehicle behind (`x`, `lane`), as (bumper gap, its speed).
pub fn follower_in_lane(
    cfg: &EnvConfig,
    state: &EnvState,
    x: f64,
    lane: usize,
) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for v in vehicles_of(state) {
        if !v.occupies(lane) {
            continue;
        }
        let dx = wrap_delta(x - v.x, cfg.road_length);
        if dx <= 0.0 {
            continue;
        }
        let gap = dx - cfg.vehicle_length;
        if best.map_or(true, |(g, _)| gap < g) {
            best = Some((gap, v.speed));
        }
    }
    best
}

/// Leader of the ego in a given lane.
pub fn ego_leader(cfg: &EnvConfig, state: &EnvState, lane: usize) -> Option<(f64, f64)> {
    leader_in_lane(cfg, state, state.ego.x, lane)
}

/// Applies one meta-action and advances the world by `dt`.
pub fn step(cfg: &EnvConfig, state: &EnvState, action: Action) -> Result<StepOutcome, SimError> {
    if state.done {
        return Err(SimError::TerminalStep);
    }
    let mut next = state.clone();

    // 1. ego meta-action; lane actions are clamped at the road edges and
    //    ignored while a maneuver is already in progress
    match action {
        Action::LaneLeft => {
            if next.ego.lane_change.is_none() && next.ego.lane > 0 {
                let target = next.ego.lane - 1;
                next.ego.start_lane_change(target);
            }
        }
        Action::LaneRight => {
            if next.ego.lane_change.is_none() && next.ego.lane + 1 < cfg.lanes {
                let target = next.ego.lane + 1;
                next.ego.start_lane_change(target);
            }
        }
        Action::Faster => {
            next.ego.speed = (next.ego.speed + cfg.speed_increment).min(cfg.speed_max);
        }
        Action::Slower => {
            next.ego.speed = (next.ego.speed - cfg.speed_increment).max(cfg.speed_min);
        }
        Action::Idle => {}
    }

    // 2. traffic lane-change decisions (stateless draws, ego-independent)
    for i in 0..next.traffic.len() {
        let draw = hash_unit(next.seed, i as u64, (next.step as u64) << 1);
        if draw >= cfg.traffic_lane_change_prob || next.traffic[i].lane_change.is_some() {
            continue;
        }
        let dir_draw = hash_unit(next.seed, i as u64, ((next.step as u64) << 1) | 1);
        let lane = next.traffic[i].lane;
        let target = if dir_draw < 0.5 {
            lane.checked_sub(1)
        } else if lane + 1 < cfg.lanes {
            Some(lane + 1)
        } else {
            None
        };
        if let Some(target) = target {
            let x = next.traffic[i].x;
            let front_ok = leader_in_lane(cfg, &next, x, target)
                .map_or(true, |(gap, _)| gap >= TRAFFIC_LC_CLEARANCE);
            let rear_ok = follower_in_lane(cfg, &next, x, target)
                .map_or(true, |(gap, _)| gap >= TRAFFIC_LC_CLEARANCE);
            if front_ok && rear_ok {
                next.traffic[i].start_lane_change(target);
            }
        }
    }

    // 3. traffic IDM accelerations against the current leader
    let accels: Vec<f64> = next
        .traffic
        .iter()
        .map(|v| match leader_in_lane(cfg, &next, v.x, v.lane) {
            Some((gap, lead_speed)) => idm_accel(v.speed, gap, lead_speed),
            None => idm_accel(v.speed, f64::MAX, v.speed),
        })
        .collect();

    // 4.-6. integrate, interpolate lane changes, wrap
    for (v, a) in next.traffic.iter_mut().zip(&accels) {
        v.speed = (v.speed + a * cfg.dt).max(0.0);
        v.x = (v.x + v.speed * cfg.dt).rem_euclid(cfg.road_length);
        v.advance_lane_change(cfg);
    }
    next.ego.x = (next.ego.x + next.ego.speed * cfg.dt).rem_euclid(cfg.road_length);
    next.ego.advance_lane_change(cfg);

    // 7.-8. collision, reward
    let collided = check_collision(cfg, &next);
    let reward = if collided { 0.0 } else { reward_of(cfg, &next) };

    next.step += 1;
    if collided {
        next.done = true;
        next.cause = TerminalCause::Collision;
    } else if next.step >= cfg.max_steps {
        next.done = true;
        next.cause = TerminalCause::Timeout;
    }

    let obs = observe(cfg, &next);
    Ok(StepOutcome {
        done: next.done,
        cause: next.cause,
        state: next,
        obs,
        reward,
    })
}

/// Normalized ego speed in [0, 1].
pub fn speed_fraction(cfg: &EnvConfig, state: &EnvState) -> f64 {
    (state.ego.speed - cfg.speed_min) / (cfg.speed_max - cfg.speed_min)
}

/// One line of a trace dump: the world pose at which `action` was taken
/// and the reward it earned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub episode_seed: u64,
    pub step: usize,
    pub ego: Vehicle,
    pub traffic: Vec<Vehicle>,
    pub action: Action,
    pub reward: f64,
}

/// Replays a recorded episode (seed plus its action sequence) and returns
/// per-step trace rows for offline visualization. Determinism makes the
/// replay exact, so nothing needs to be retained during rollouts.
pub fn trace_episode(
    cfg: &EnvConfig,
    seed: u64,
    actions: &[Action],
) -> Result<Vec<TraceRow>, SimError> {
    let (mut state, _) = reset(cfg, seed)?;
    let mut rows = Vec::with_capacity(actions.len());
    for &action in actions {
        let pre = state.clone();
        let out = step(cfg, &state, action)?;
        rows.push(TraceRow {
            episode_seed: seed,
            step: pre.step,
            ego: pre.ego,
            traffic: pre.traffic,
            action,
            reward: out.reward,
        });
        state = out.state;
        if state.done {
            break;
        }
    }
    Ok(rows)
}

fn reward_of(cfg: &EnvConfig, state: &EnvState) -> f64 {
    let lane_frac = state.ego.lane as f64 / (cfg.lanes - 1) as f64;
    cfg.reward_speed_weight * speed_fraction(cfg, state) + cfg.reward_right_weight * lane_frac
}

/// True iff the ego rectangle overlaps any traffic rectangle (axis-aligned,
/// using lateral offsets during lane changes; touching counts).
pub fn check_collision(cfg: &EnvConfig, state: &EnvState) -> bool {
    let ego_lat = state.ego.lateral_pos(cfg);
    state.traffic.iter().any(|v| {
        wrap_delta(v.x - state.ego.x, cfg.road_length).abs() <= cfg.vehicle_length
            && (v.lateral_pos(cfg) - ego_lat).abs() <= cfg.vehicle_width
    })
}
