//! The denoiser: an MLP on flattened state windows plus a sinusoidal step
//! embedding, its training step, and the reverse-process plan sampler.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{NormStats, TrainWindow};
use crate::numerics::{
    self, forward, Activation, Mat, NetParams, NetSpec, OptimState, OutputHead, Rng,
};

use super::plan::PlanBuffer;
use super::schedule::{build_schedule, q_sample, NoiseSchedule};
use super::DiffuserError;

/// Counts denoiser network function evaluations; the compute currency of
/// diffusion sampling. Each caller owns its meter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NfeMeter {
    pub evaluations: u64,
}

/// Noise-prediction network over H×D state windows.
#[derive(Debug, Clone)]
pub struct DenoiserModel {
    pub spec: NetSpec,
    pub params: NetParams,
    pub horizon: usize,
    pub state_dim: usize,
    pub time_embed_dim: usize,
    pub stats: NormStats,
}

impl DenoiserModel {
    pub fn new(
        horizon: usize,
        state_dim: usize,
        hidden: &[usize],
        time_embed_dim: usize,
        stats: NormStats,
        rng: &mut Rng,
    ) -> Result<Self, DiffuserError> {
        if horizon < 2 {
            return Err(DiffuserError::BadHorizon { horizon });
        }
        if stats.dim() != state_dim {
            return Err(DiffuserError::ShapeMismatch {
                expected: state_dim,
                got: stats.dim(),
            });
        }
        let window = horizon * state_dim;
        let mut widths = vec![window + time_embed_dim];
        widths.extend_from_slice(hidden);
        widths.push(window);
        let spec = NetSpec::new(widths, Activation::Gelu, OutputHead::Linear)?;
        let params = NetParams::init(&spec, rng);
        Ok(DenoiserModel {
            spec,
            params,
            horizon,
            state_dim,
            time_embed_dim,
            stats,
        })
    }

    pub fn window_len(&self) -> usize {
        self.horizon * self.state_dim
    }

    /// Predicts the noise component of a (normalized) noisy window at
    /// diffusion step k.
    pub fn predict_noise(&self, window: &[f64], k: usize) -> Result<Vec<f64>, DiffuserError> {
        if window.len() != self.window_len() {
            return Err(DiffuserError::ShapeMismatch {
                expected: self.window_len(),
                got: window.len(),
            });
        }
        let mut input = Vec::with_capacity(window.len() + self.time_embed_dim);
        input.extend_from_slice(window);
        input.extend_from_slice(&time_embedding(k, self.time_embed_dim));
        let out = forward(&self.spec, &self.params, &input)?;
        if out.iter().any(|x| !x.is_finite()) {
            return Err(DiffuserError::NonFiniteModel);
        }
        Ok(out)
    }
}

/// Sinusoidal embedding of the diffusion step index.
pub fn time_embedding(k: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut out = vec![0.0; dim];
    for i in 0..half {
        let freq = (-(10_000.0f64.ln()) * i as f64 / half as f64).exp();
        let angle = k as f64 * freq;
        out[i] = angle.sin();
        out[half + i] = angle.cos();
    }
    out
}

/// One denoising-loss training step over a window batch.
///
/// Per sample: k ~ U{1..K}, ε ~ N(0, I), and the squared error between ε
/// and the model's prediction at q_sample(x₀, k, ε) is minimized. The first
/// state slot is the conditioning slot: the sampler pins it to the clean
/// observation after every reverse step, so training pins it too (the
/// network always sees a clean conditioning slot) and its columns are
/// masked out of the loss. Returns the batch-mean loss per unmasked
/// dimension.
pub fn train_step(
    model: &mut DenoiserModel,
    opt: &mut OptimState,
    schedule: &NoiseSchedule,
    windows: &[TrainWindow],
    rng: &mut Rng,
) -> Result<f64, DiffuserError> {
    if windows.is_empty() {
        return Err(DiffuserError::EmptyBatch);
    }
    let d = model.state_dim;
    let wlen = model.window_len();
    let in_dim = wlen + model.time_embed_dim;
    let batch = windows.len();
    let steps = schedule.steps();

    let mut inputs = Vec::with_capacity(batch * in_dim);
    let mut targets = Vec::with_capacity(batch * wlen);
    for w in windows {
        if w.states.len() != wlen {
            return Err(DiffuserError::ShapeMismatch {
                expected: wlen,
                got: w.states.len(),
            });
        }
        let k = 1 + rng.index(steps);
        let eps = rng.normal_vec(wlen);
        let mut xk = q_sample(&w.states, k, &eps, schedule)?;
        xk[..d].copy_from_slice(&w.states[..d]);
        inputs.extend_from_slice(&xk);
        inputs.extend_from_slice(&time_embedding(k, model.time_embed_dim));
        targets.extend_from_slice(&eps);
    }
    let inputs = Mat::from_vec(batch, in_dim, inputs);
    let unmasked = (wlen - d) as f64;

    let loss = numerics::train_step(&model.spec, &mut model.params, opt, &inputs, |out| {
        let mut grad = Mat::zeros(batch, wlen);
        let mut loss = 0.0;
        for r in 0..batch {
            let target = &targets[r * wlen..(r + 1) * wlen];
            let row = out.row(r);
            let grow = grad.row_mut(r);
            // the first state slot (columns 0..d) is the conditioning mask
            for i in d..wlen {
                let diff = row[i] - target[i];
                loss += diff * diff;
                grow[i] = 2.0 * diff / (unmasked * batch as f64);
            }
        }
        Ok((loss / (unmasked * batch as f64), grad))
    })?;
    Ok(loss)
}

/// Full training run for a denoiser: cosine learning-rate decay to a tenth
/// of the base rate, and an exponential moving average of the weights
/// (decay 0.999) which becomes the final model — the standard recipe for
/// stable diffusion sampling. `progress` is called with (step, loss).
#[allow(clippy::too_many_arguments)]
pub fn train_denoiser(
    model: &mut DenoiserModel,
    schedule: &NoiseSchedule,
    dataset: &crate::datagen::Dataset,
    steps: usize,
    batch_size: usize,
    base_lr: f64,
    rng: &mut Rng,
    mut progress: impl FnMut(usize, f64),
) -> Result<f64, DiffuserError> {
    let stats = model.stats.clone();
    let mut opt = OptimState::new(model.spec.param_count()).with_learning_rate(base_lr);
    let ema_decay = 0.999;
    let mut ema: Vec<f64> = model.params.as_slice().to_vec();
    let mut last_loss = f64::NAN;
    for step in 0..steps {
        let t = step as f64 / steps.max(1) as f64;
        opt.learning_rate =
            base_lr * (0.1 + 0.9 * 0.5 * (1.0 + (std::f64::consts::PI * t).cos()));
        let windows =
            crate::datagen::sample_windows(dataset, &stats, model.horizon, batch_size, rng)?;
        last_loss = train_step(model, &mut opt, schedule, &windows, rng)?;
        for (e, &p) in ema.iter_mut().zip(model.params.as_slice()) {
            *e = ema_decay * *e + (1.0 - ema_decay) * p;
        }
        progress(step, last_loss);
    }
    model.params = NetParams::from_flat(&model.spec, ema)?;
    Ok(last_loss)
}

/// Clean-sample clamp during the reverse process, in normalized units.
/// Simulator observations are bounded, so valid states never come close to
/// this band; without it, prediction error is amplified by 1/√α_k per step
/// and the chain can diverge on an imperfect model.
pub const SAMPLE_CLIP: f64 = 8.0;

/// Samples one plan by running the full reverse process from pure noise,
/// clamping the first state slot to the (normalized) current observation
/// after every reverse step. Adds exactly K evaluations to the meter.
///
/// Each step forms the posterior mean through the implied clean sample
/// x̂₀ = (x_k − √(1−ᾱ_k)·ε̂)/√ᾱ_k, clamped to ±[`SAMPLE_CLIP`]; in range
/// this is algebraically the textbook mean (x_k − (1−α_k)/√(1−ᾱ_k)·ε̂)/√α_k.
pub fn sample_plan(
    model: &DenoiserModel,
    schedule: &NoiseSchedule,
    observation: &[f64],
    rng: &mut Rng,
    meter: &mut NfeMeter,
) -> Result<PlanBuffer, DiffuserError> {
    if observation.len() != model.state_dim {
        return Err(DiffuserError::ShapeMismatch {
            expected: model.state_dim,
            got: observation.len(),
        });
    }
    let d = model.state_dim;
    let wlen = model.window_len();
    let cond = model.stats.normalize(observation);

    let mut x = rng.normal_vec(wlen);
    for k in (1..=schedule.steps()).rev() {
        let eps_hat = model.predict_noise(&x, k)?;
        meter.evaluations += 1;
        let alpha = schedule.alpha(k);
        let alpha_bar = schedule.alpha_bar(k);
        let alpha_bar_prev = schedule.alpha_bar(k - 1);
        // posterior mean coefficients on (clamped x̂₀, x_k)
        let c0 = alpha_bar_prev.sqrt() * (1.0 - alpha) / (1.0 - alpha_bar);
        let c1 = alpha.sqrt() * (1.0 - alpha_bar_prev) / (1.0 - alpha_bar);
        let to_x0 = 1.0 / alpha_bar.sqrt();
        let noise_scale = (1.0 - alpha_bar).sqrt();
        let sigma = if k > 1 {
            schedule.posterior_var(k).sqrt()
        } else {
            0.0
        };
        for i in 0..wlen {
            let x0_hat =
                ((x[i] - noise_scale * eps_hat[i]) * to_x0).clamp(-SAMPLE_CLIP, SAMPLE_CLIP);
            let mean = c0 * x0_hat + c1 * x[i];
            x[i] = if k > 1 {
                mean + sigma * rng.standard_normal()
            } else {
                mean
            };
        }
        // inpainting: the conditioning slot is pinned after every step
        x[..d].copy_from_slice(&cond);
    }

    let mut states = Vec::with_capacity(model.horizon);
    // slot 0 is the raw conditioning observation, bit for bit
    states.push(observation.to_vec());
    for i in 1..model.horizon {
        states.push(model.stats.denormalize(&x[i * d..(i + 1) * d]));
    }
    Ok(PlanBuffer::new(states))
}

/// Sidecar metadata stored next to a denoiser checkpoint.
#[derive(Debug, Serialize, Deserialize)]
pub struct DenoiserMeta {
    pub horizon: usize,
    pub state_dim: usize,
    pub diffusion_steps: usize,
    pub schedule: String,
    pub time_embed_dim: usize,
    pub norm_stats: NormStats,
    pub norm_stats_hash: String,
}

pub fn meta_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    checkpoint.with_file_name(name)
}

/// Saves the weights in the shared checkpoint format plus a JSON sidecar
/// with the sampling geometry and normalization stats.
pub fn save_denoiser(
    model: &DenoiserModel,
    schedule: &NoiseSchedule,
    path: &Path,
    seed: Option<u64>,
    meta: serde_json::Value,
) -> Result<(), DiffuserError> {
    numerics::save_net(path, &model.spec, &model.params, seed, meta)?;
    let sidecar = DenoiserMeta {
        horizon: model.horizon,
        state_dim: model.state_dim,
        diffusion_steps: schedule.steps(),
        schedule: "cosine".into(),
        time_embed_dim: model.time_embed_dim,
        norm_stats: model.stats.clone(),
        norm_stats_hash: model.stats.hash(),
    };
    let sidecar_path = meta_path(path);
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| DiffuserError::Io(sidecar_path.clone(), e.to_string()))?;
    std::fs::write(&sidecar_path, json).map_err(|e| DiffuserError::Io(sidecar_path, e.to_string()))
}

pub fn load_denoiser(path: &Path) -> Result<(DenoiserModel, NoiseSchedule), DiffuserError> {
    let (spec, params, _, _) = numerics::load_net(path)?;
    let sidecar_path = meta_path(path);
    let text = std::fs::read_to_string(&sidecar_path)
        .map_err(|e| DiffuserError::Io(sidecar_path.clone(), e.to_string()))?;
    let meta: DenoiserMeta = serde_json::from_str(&text)
        .map_err(|e| DiffuserError::Io(sidecar_path.clone(), e.to_string()))?;
    if meta.schedule != "cosine" {
        return Err(DiffuserError::Io(
            sidecar_path,
            format!("unknown schedule {:?}", meta.schedule),
        ));
    }
    let expected_in = meta.horizon * meta.state_dim + meta.time_embed_dim;
    if spec.input_dim() != expected_in {
        return Err(DiffuserError::ShapeMismatch {
            expected: expected_in,
            got: spec.input_dim(),
        });
    }
    let schedule = build_schedule(meta.diffusion_steps)?;
    Ok((
        DenoiserModel {
            spec,
            params,
            horizon: meta.horizon,
            state_dim: meta.state_dim,
            time_embed_dim: meta.time_embed_dim,
            stats: meta.norm_stats,
        },
        schedule,
    ))
}
