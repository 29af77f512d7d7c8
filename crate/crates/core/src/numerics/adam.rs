//! Adaptive-moment optimizer and the shared training step.

use super::matrix::Mat;
use super::net::{backward, forward_cached, NetParams, NetSpec};
use super::NumericsError;

/// Optimizer state for one parameter vector.
#[derive(Debug, Clone)]
pub struct OptimState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub delta: f64,
}

impl OptimState {
    /// Community-standard defaults: lr 1e-3, β1 0.9, β2 0.999, δ 1e-8.
    pub fn new(param_count: usize) -> Self {
        OptimState {
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step: 0,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            delta: 1e-8,
        }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update. Increments the step counter by
    /// exactly 1.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.first_moment.len());
        assert_eq!(grad.len(), params.len());
        self.step += 1;
        let b1 = self.beta1;
        let b2 = self.beta2;
        let bias1 = 1.0 - b1.powi(self.step as i32);
        let bias2 = 1.0 - b2.powi(self.step as i32);
        let lr = self.learning_rate;
        for i in 0..params.len() {
            let g = grad[i];
            let m = b1 * self.first_moment[i] + (1.0 - b1) * g;
            let v = b2 * self.second_moment[i] + (1.0 - b2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            let m_hat = m / bias1;
            let v_hat = v / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.delta);
        }
    }
}

/// One optimization step on a batch.
///
/// `loss_grad` receives the output batch (one row per sample) and returns
/// the batch-mean loss together with its gradient w.r.t. the outputs.
/// Returns the loss. Non-finite losses or per-layer gradients are rejected.
pub fn train_step<F>(
    spec: &NetSpec,
    params: &mut NetParams,
    opt: &mut OptimState,
    inputs: &Mat,
    loss_grad: F,
) -> Result<f64, NumericsError>
where
    F: FnOnce(&Mat) -> Result<(f64, Mat), NumericsError>,
{
    if inputs.rows() == 0 {
        return Err(NumericsError::EmptyBatch);
    }
    let cache = forward_cached(spec, params, inputs)?;
    let (loss, d_out) = loss_grad(cache.output())?;
    if !loss.is_finite() {
        return Err(NumericsError::NonFiniteLoss);
    }
    let grad = backward(spec, params, &cache, &d_out)?;
    // check from the output layer down: the first non-finite gradient in
    // backprop order names the layer where the problem arose
    for l in (0..spec.layer_count()).rev() {
        let (w_off, _, fan_in, fan_out) = spec.layer_layout(l);
        let end = w_off + fan_in * fan_out + fan_out;
        if grad[w_off..end].iter().any(|g| !g.is_finite()) {
            return Err(NumericsError::NonFiniteGradient { layer: l });
        }
    }
    opt.update(params.as_mut_slice(), &grad);
    Ok(loss)
}
