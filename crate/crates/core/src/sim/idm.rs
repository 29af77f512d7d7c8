//! Intelligent-Driver-Model car following, used by the traffic vehicles.

/// IDM parameters for traffic.
pub const IDM_DESIRED_SPEED: f64 = 25.0;
pub const IDM_TIME_HEADWAY: f64 = 1.5;
pub const IDM_MIN_GAP: f64 = 2.0;
pub const IDM_MAX_ACCEL: f64 = 3.0;
pub const IDM_COMFORT_DECEL: f64 = 5.0;

/// IDM acceleration for a follower at `speed` with bumper-to-bumper `gap`
/// to a leader moving at `lead_speed`. A non-positive gap is treated as an
/// emergency and returns maximum braking.
pub fn idm_accel(speed: f64, gap: f64, lead_speed: f64) -> f64 {
    idm_accel_with(
        speed,
        gap,
        lead_speed,
        IDM_DESIRED_SPEED,
        IDM_TIME_HEADWAY,
        IDM_MIN_GAP,
        IDM_MAX_ACCEL,
        IDM_COMFORT_DECEL,
    )
}

/// IDM with explicit parameters; the scripted behavior policy reuses this
/// with its own desired speed.
#[allow(clippy::too_many_arguments)]
pub fn idm_accel_with(
    speed: f64,
    gap: f64,
    lead_speed: f64,
    desired_speed: f64,
    time_headway: f64,
    min_gap: f64,
    max_accel: f64,
    comfort_decel: f64,
) -> f64 {
    if gap <= 0.0 {
        return -comfort_decel;
    }
    let closing = speed - lead_speed;
    let desired_gap = min_gap
        + (speed * time_headway + speed * closing / (2.0 * (max_accel * comfort_decel).sqrt()))
            .max(0.0);
    max_accel * (1.0 - (speed / desired_speed).powi(4) - (desired_gap / gap).powi(2))
}

/// Free-road IDM acceleration (no leader in range).
pub fn idm_free_accel(speed: f64, desired_speed: f64, max_accel: f64) -> f64 {
    max_accel * (1.0 - (speed / desired_speed).powi(4))
}
