//! Cosine noise schedule and the closed-form forward noising kernel.

use super::DiffuserError;

/// Cosine schedule offset.
const COSINE_S: f64 = 0.008;
/// Per-step retention floor; keeps the final reverse steps well-conditioned.
const ALPHA_FLOOR: f64 = 1e-3;

/// Per-step retention factors α_k, their running product ᾱ_k (with ᾱ_0 = 1),
/// and the fixed posterior variances used by the reverse process.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    steps: usize,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    posterior_var: Vec<f64>,
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// α_k for k in 1..=K.
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[k - 1]
    }

    /// ᾱ_k for k in 0..=K; ᾱ_0 = 1 exactly.
    pub fn alpha_bar(&self, k: usize) -> f64 {
        self.alpha_bar[k]
    }

    /// Posterior variance Σ_k = (1−ᾱ_{k−1})/(1−ᾱ_k)·(1−α_k) for k in 1..=K.
    /// Σ_1 is exactly 0, so the final reverse step is deterministic.
    pub fn posterior_var(&self, k: usize) -> f64 {
        self.posterior_var[k - 1]
    }
}

/// Builds a K-step cosine schedule. The raw ᾱ curve is
/// cos²(((k/K + s)/(1 + s))·π/2) normalized to 1 at k = 0; per-step ratios
/// are floored at 1e-3 and ᾱ is recomputed as their running product so the
/// arrays stay mutually consistent.
pub fn build_schedule(steps: usize) -> Result<NoiseSchedule, DiffuserError> {
    if steps < 2 {
        return Err(DiffuserError::BadSteps { steps });
    }
    let f = |t: f64| (((t + COSINE_S) / (1.0 + COSINE_S)) * std::f64::consts::FRAC_PI_2)
        .cos()
        .powi(2);
    let f0 = f(0.0);

    let mut alpha = Vec::with_capacity(steps);
    let mut alpha_bar = Vec::with_capacity(steps + 1);
    alpha_bar.push(1.0);
    let mut prev_raw = 1.0;
    let mut running = 1.0;
    for k in 1..=steps {
        let raw = f(k as f64 / steps as f64) / f0;
        let a = (raw / prev_raw).max(ALPHA_FLOOR);
        prev_raw = raw;
        running *= a;
        alpha.push(a);
        alpha_bar.push(running);
    }

    let posterior_var = (1..=steps)
        .map(|k| (1.0 - alpha_bar[k - 1]) / (1.0 - alpha_bar[k]) * (1.0 - alpha[k - 1]))
        .collect();

    Ok(NoiseSchedule {
        steps,
        alpha,
        alpha_bar,
        posterior_var,
    })
}

/// Closed-form forward noising: x_k = √ᾱ_k·x₀ + √(1−ᾱ_k)·ε.
pub fn q_sample(
    x0: &[f64],
    k: usize,
    eps: &[f64],
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>, DiffuserError> {
    if k == 0 || k > schedule.steps() {
        return Err(DiffuserError::BadStepIndex {
            k,
            steps: schedule.steps(),
        });
    }
    if eps.len() != x0.len() {
        return Err(DiffuserError::ShapeMismatch {
            expected: x0.len(),
            got: eps.len(),
        });
    }
    let ab = schedule.alpha_bar(k);
    let (signal, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0
        .iter()
        .zip(eps)
        .map(|(&x, &e)| signal * x + noise * e)
        .collect())
}
