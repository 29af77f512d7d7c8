//! Sampling of fixed-horizon training windows. A window is H consecutive
//! observations from one episode (never crossing an episode boundary) plus
//! the H-1 actions between them.

use crate::numerics::Rng;
use crate::sim::Action;

use super::dataset::Dataset;
use super::norm::NormStats;
use super::DataError;

/// A normalized H×D state window (row-major) and its aligned actions.
#[derive(Debug, Clone)]
pub struct TrainWindow {
    pub states: Vec<f64>,
    pub actions: Vec<Action>,
}

impl TrainWindow {
    pub fn state(&self, i: usize, dim: usize) -> &[f64] {
        &self.states[i * dim..(i + 1) * dim]
    }
}

/// Number of valid window start positions for horizon `h`.
pub fn window_count(dataset: &Dataset, h: usize) -> usize {
    (0..dataset.episode_count())
        .map(|e| dataset.episode(e).len().saturating_sub(h - 1))
        .sum()
}

/// Draws `batch` windows uniformly over all valid start positions.
pub fn sample_windows(
    dataset: &Dataset,
    stats: &NormStats,
    h: usize,
    batch: usize,
    rng: &mut Rng,
) -> Result<Vec<TrainWindow>, DataError> {
    if h < 2 {
        return Err(DataError::BadHorizon { h });
    }
    // cumulative valid-start counts per episode
    let mut cumulative = Vec::with_capacity(dataset.episode_count());
    let mut total = 0usize;
    for e in 0..dataset.episode_count() {
        total += dataset.episode(e).len().saturating_sub(h - 1);
        cumulative.push(total);
    }
    if total == 0 {
        return Err(DataError::NoWindow { h });
    }

    let mut windows = Vec::with_capacity(batch);
    for _ in 0..batch {
        let idx = rng.index(total);
        let e = cumulative.partition_point(|&c| c <= idx);
        let before = if e == 0 { 0 } else { cumulative[e - 1] };
        let start = idx - before;
        windows.push(extract(dataset, stats, e, start, h));
    }
    Ok(windows)
}

/// Enumerates every window of horizon `h`, in episode order. Used by
/// evaluation code that wants the full population rather than a sample.
pub fn all_windows(dataset: &Dataset, stats: &NormStats, h: usize) -> Vec<TrainWindow> {
    let mut out = Vec::new();
    for e in 0..dataset.episode_count() {
        let len = dataset.episode(e).len();
        for start in 0..len.saturating_sub(h - 1) {
            out.push(extract(dataset, stats, e, start, h));
        }
    }
    out
}

fn extract(dataset: &Dataset, stats: &NormStats, e: usize, start: usize, h: usize) -> TrainWindow {
    let ep = dataset.episode(e);
    let d = dataset.obs_dim();
    let mut states = Vec::with_capacity(h * d);
    for t in &ep[start..start + h] {
        states.extend(stats.normalize(&t.obs));
    }
    let actions = ep[start..start + h - 1].iter().map(|t| t.action).collect();
    TrainWindow { states, actions }
}
