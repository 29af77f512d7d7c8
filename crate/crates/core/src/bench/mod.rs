//! Evaluation harness: seeded episode batches, metric aggregation, the
//! threshold sweep, and report rendering.
//!
//! Shared-seed discipline: every mode (or threshold) in a comparison
//! consumes the same environment seeds, so the planner is the only varying
//! factor. Aggregation is a deterministic fold in seed order.

mod config;
mod report;

pub use config::{
    AppConfig, DatagenSettings, DiffuserSettings, InvdynSettings, PlannerSettings,
};
pub use report::{parse_csv, render_table, to_csv, CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::planner::{
    run_episode, saved_nfe, ActionOracle, EpisodeLog, PlanProvider, PlannerConfig,
};
use crate::sim::EnvConfig;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("need at least one episode")]
    NoEpisodes,
    #[error("a sweep needs at least 3 thresholds, got {got}")]
    TooFewThresholds { got: usize },
    #[error("sweep thresholds must be strictly increasing (offender: {value})")]
    UnorderedThresholds { value: f64 },
    #[error("empty report")]
    EmptyReport,
    #[error("bad csv: {0}")]
    BadCsv(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("no entropy samples collected during calibration")]
    NoEntropySamples,
    #[error("io error on {0}: {1}")]
    Io(std::path::PathBuf, String),
}

/// One reported table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub label: String,
    pub mean_len: f64,
    pub std_len: f64,
    pub collisions: usize,
    pub collision_rate: f64,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub high_speed_reward: f64,
    pub saved_nfe_pct: f64,
    pub episodes: usize,
    pub seeds: Vec<u64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-episode high-speed reward: the summed speed component over steps at
/// or above 75% of the speed range, divided by the trajectory length.
pub fn high_speed_reward(log: &EpisodeLog, cfg: &EnvConfig) -> f64 {
    if log.length == 0 {
        return 0.0;
    }
    let total: f64 = log
        .steps
        .iter()
        .filter(|s| s.speed_frac >= 0.75)
        .map(|s| cfg.reward_speed_weight * s.speed_frac)
        .sum();
    total / log.length as f64
}

/// Recomputes a [`MetricsRow`] from raw episode logs.
pub fn aggregate(label: &str, logs: &[EpisodeLog], cfg: &EnvConfig) -> Result<MetricsRow, BenchError> {
    if logs.is_empty() {
        return Err(BenchError::NoEpisodes);
    }
    let lengths: Vec<f64> = logs.iter().map(|l| l.length as f64).collect();
    let rewards: Vec<f64> = logs.iter().map(|l| l.episode_return).collect();
    let (mean_len, std_len) = mean_std(&lengths);
    let (mean_reward, std_reward) = mean_std(&rewards);
    let collisions = logs.iter().filter(|l| l.collided()).count();
    let hs = logs.iter().map(|l| high_speed_reward(l, cfg)).sum::<f64>() / logs.len() as f64;
    let saved = logs.iter().map(saved_nfe).sum::<f64>() / logs.len() as f64;
    Ok(MetricsRow {
        label: label.to_string(),
        mean_len,
        std_len,
        collisions,
        collision_rate: collisions as f64 / logs.len() as f64,
        mean_reward,
        std_reward,
        high_speed_reward: hs,
        saved_nfe_pct: saved,
        episodes: logs.len(),
        seeds: logs.iter().map(|l| l.seed).collect(),
    })
}

/// Runs `episodes` seeded episodes (seeds base..base+n) and aggregates them.
pub fn evaluate(
    cfg: &EnvConfig,
    plans: &impl PlanProvider,
    oracle: &impl ActionOracle,
    planner: &PlannerConfig,
    episodes: usize,
    base_seed: u64,
    label: &str,
) -> crate::Result<(MetricsRow, Vec<EpisodeLog>)> {
    if episodes == 0 {
        return Err(BenchError::NoEpisodes.into());
    }
    let mut logs = Vec::with_capacity(episodes);
    for e in 0..episodes as u64 {
        logs.push(run_episode(cfg, plans, oracle, planner, base_seed + e)?);
    }
    let row = aggregate(label, &logs, cfg)?;
    Ok((row, logs))
}

/// Runs no-replan rollouts on calibration seeds and returns the requested
/// percentile of the entropies the execution gate inspects (plan age >= 1),
/// together with the sample count. Calibration seeds should be disjoint
/// from evaluation seeds.
pub fn calibrate_epsilon(
    cfg: &EnvConfig,
    plans: &impl PlanProvider,
    oracle: &impl ActionOracle,
    episodes: usize,
    base_seed: u64,
    percentile: f64,
) -> crate::Result<(f64, usize)> {
    let (_, logs) = evaluate(
        cfg,
        plans,
        oracle,
        &PlannerConfig::no_replan(),
        episodes,
        base_seed,
        "calibration",
    )?;
    let mut entropies: Vec<f64> = logs
        .iter()
        .flat_map(|l| l.steps.iter())
        .filter(|s| s.plan_age >= 1)
        .map(|s| s.entropy)
        .collect();
    if entropies.is_empty() {
        return Err(BenchError::NoEntropySamples.into());
    }
    entropies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((percentile.clamp(0.0, 1.0)) * (entropies.len() - 1) as f64).floor() as usize;
    Ok((entropies[rank], entropies.len()))
}

/// One threshold's worth of sweep output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub row: MetricsRow,
    /// Plan counts per episode, in seed order.
    pub plan_counts: Vec<usize>,
}

/// Sweep over thresholds with shared seeds, plus rank correlations of the
/// threshold against each headline metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub spearman_mean_len: f64,
    pub spearman_mean_reward: f64,
    pub spearman_collision_rate: f64,
    pub spearman_saved_nfe: f64,
}

pub fn sweep(
    cfg: &EnvConfig,
    plans: &impl PlanProvider,
    oracle: &impl ActionOracle,
    epsilons: &[f64],
    episodes: usize,
    base_seed: u64,
) -> crate::Result<SweepReport> {
    if epsilons.len() < 3 {
        return Err(BenchError::TooFewThresholds {
            got: epsilons.len(),
        }
        .into());
    }
    for pair in epsilons.windows(2) {
        if pair[1] <= pair[0] {
            return Err(BenchError::UnorderedThresholds { value: pair[1] }.into());
        }
    }
    let mut entries = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let label = format!("epsilon_{eps}");
        let (row, logs) = evaluate(
            cfg,
            plans,
            oracle,
            &PlannerConfig::adaptive(eps),
            episodes,
            base_seed,
            &label,
        )?;
        entries.push(SweepEntry {
            epsilon: eps,
            row,
            plan_counts: logs.iter().map(|l| l.plan_count).collect(),
        });
    }
    let xs: Vec<f64> = entries.iter().map(|e| e.epsilon).collect();
    let pick = |f: fn(&MetricsRow) -> f64| -> Vec<f64> {
        entries.iter().map(|e| f(&e.row)).collect()
    };
    Ok(SweepReport {
        spearman_mean_len: spearman(&xs, &pick(|r| r.mean_len)),
        spearman_mean_reward: spearman(&xs, &pick(|r| r.mean_reward)),
        spearman_collision_rate: spearman(&xs, &pick(|r| r.collision_rate)),
        spearman_saved_nfe: spearman(&xs, &pick(|r| r.saved_nfe_pct)),
        entries,
    })
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ties share the average rank
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
