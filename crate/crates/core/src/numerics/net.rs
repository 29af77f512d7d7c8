//! Fixed-topology multilayer perceptrons over flat 64-bit parameter vectors,
//! with a hand-written backward pass. The only architectures this crate
//! needs are MLPs, so there is no general autodiff graph.

use serde::{Deserialize, Serialize};

use super::matrix::Mat;
use super::rng::Rng;
use super::NumericsError;

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Gelu,
}

/// Whether the final layer is a plain linear map or shares the hidden
/// activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputHead {
    Linear,
    None,
}

/// Architecture of a feed-forward network: layer widths (input first),
/// the hidden activation, and the output head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub output: OutputHead,
}

impl NetSpec {
    pub fn new(
        widths: Vec<usize>,
        activation: Activation,
        output: OutputHead,
    ) -> Result<Self, NumericsError> {
        let spec = NetSpec {
            widths,
            activation,
            output,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if self.widths.len() < 2 {
            return Err(NumericsError::InvalidSpec(
                "a network needs at least an input and an output layer".into(),
            ));
        }
        if self.widths.iter().any(|&w| w == 0) {
            return Err(NumericsError::InvalidSpec(
                "all layer widths must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Number of weight layers (transitions between widths).
    pub fn layer_count(&self) -> usize {
        self.widths.len() - 1
    }

    /// Total flat parameter count: Σ (inᵢ·outᵢ + outᵢ).
    pub fn param_count(&self) -> usize {
        self.widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// (weight offset, bias offset, in, out) for layer `l` in the flat vector.
    pub fn layer_layout(&self, l: usize) -> (usize, usize, usize, usize) {
        let mut offset = 0;
        for i in 0..l {
            offset += self.widths[i] * self.widths[i + 1] + self.widths[i + 1];
        }
        let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
        (offset, offset + fan_in * fan_out, fan_in, fan_out)
    }

    /// (out, in) weight shapes per layer, recorded in checkpoints.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.widths.windows(2).map(|w| (w[1], w[0])).collect()
    }

    fn activated(&self, layer: usize) -> bool {
        layer + 1 < self.layer_count() || self.output == OutputHead::None
    }
}

/// Flat parameter vector for a [`NetSpec`]. Layout per layer: the (out × in)
/// weight matrix row-major, then the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    flat: Vec<f64>,
}

impl NetParams {
    /// All-zero parameters.
    pub fn zeros(spec: &NetSpec) -> Self {
        NetParams {
            flat: vec![0.0; spec.param_count()],
        }
    }

    /// Uniform init in ±√(6/(fan_in+fan_out)) per layer; biases start at zero.
    pub fn init(spec: &NetSpec, rng: &mut Rng) -> Self {
        let mut flat = vec![0.0; spec.param_count()];
        for l in 0..spec.layer_count() {
            let (w_off, b_off, fan_in, fan_out) = spec.layer_layout(l);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut flat[w_off..b_off] {
                *w = rng.uniform(-bound, bound);
            }
        }
        NetParams { flat }
    }

    pub fn from_flat(spec: &NetSpec, flat: Vec<f64>) -> Result<Self, NumericsError> {
        if flat.len() != spec.param_count() {
            return Err(NumericsError::ShapeMismatch {
                expected: spec.param_count(),
                got: flat.len(),
            });
        }
        if let Some(i) = flat.iter().position(|x| !x.is_finite()) {
            return Err(NumericsError::NonFiniteParam { index: i });
        }
        Ok(NetParams { flat })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    fn weights<'a>(&'a self, spec: &NetSpec, l: usize) -> (&'a [f64], &'a [f64]) {
        let (w_off, b_off, fan_in, fan_out) = spec.layer_layout(l);
        (
            &self.flat[w_off..w_off + fan_in * fan_out],
            &self.flat[b_off..b_off + fan_out],
        )
    }
}

fn gelu(x: f64) -> f64 {
    // tanh approximation; its exact derivative is used in the backward pass.
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let u = C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let du = C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

fn apply_activation(act: Activation, z: &mut Mat) {
    match act {
        Activation::Relu => {
            for x in z.as_mut_slice() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
        Activation::Gelu => {
            for x in z.as_mut_slice() {
                *x = gelu(*x);
            }
        }
    }
}

/// Forward pass for a batch of inputs (one row per sample).
pub fn forward_batch(
    spec: &NetSpec,
    params: &NetParams,
    inputs: &Mat,
) -> Result<Mat, NumericsError> {
    if inputs.cols() != spec.input_dim() {
        return Err(NumericsError::ShapeMismatch {
            expected: spec.input_dim(),
            got: inputs.cols(),
        });
    }
    let mut act = inputs.clone();
    for l in 0..spec.layer_count() {
        let (w, b) = params.weights(spec, l);
        let (_, _, fan_in, fan_out) = spec.layer_layout(l);
        let wmat = Mat::from_vec(fan_out, fan_in, w.to_vec());
        let mut z = act.mul_bt(&wmat);
        z.add_bias(b);
        if spec.activated(l) {
            apply_activation(spec.activation, &mut z);
        }
        act = z;
    }
    Ok(act)
}

/// Single-sample forward pass. Deterministic given (params, input).
pub fn forward(spec: &NetSpec, params: &NetParams, input: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let batch = Mat::from_vec(1, input.len(), input.to_vec());
    let out = forward_batch(spec, params, &batch)?;
    Ok(out.row(0).to_vec())
}

/// Activations cached during a forward pass, consumed by [`backward`].
pub struct ForwardCache {
    /// Pre-activations z_l per layer.
    pre: Vec<Mat>,
    /// Layer inputs: a_0 = network input, a_l = activation output of layer l-1.
    acts: Vec<Mat>,
}

impl ForwardCache {
    pub fn output(&self) -> &Mat {
        self.acts.last().unwrap()
    }
}

/// Forward pass that keeps per-layer activations for backprop.
pub fn forward_cached(
    spec: &NetSpec,
    params: &NetParams,
    inputs: &Mat,
) -> Result<ForwardCache, NumericsError> {
    if inputs.cols() != spec.input_dim() {
        return Err(NumericsError::ShapeMismatch {
            expected: spec.input_dim(),
            got: inputs.cols(),
        });
    }
    let mut acts = vec![inputs.clone()];
    let mut pre = Vec::with_capacity(spec.layer_count());
    for l in 0..spec.layer_count() {
        let (w, b) = params.weights(spec, l);
        let (_, _, fan_in, fan_out) = spec.layer_layout(l);
        let wmat = Mat::from_vec(fan_out, fan_in, w.to_vec());
        let mut z = acts[l].mul_bt(&wmat);
        z.add_bias(b);
        pre.push(z.clone());
        if spec.activated(l) {
            apply_activation(spec.activation, &mut z);
        }
        acts.push(z);
    }
    Ok(ForwardCache { pre, acts })
}

/// Backpropagates `d_out` (gradient of the loss w.r.t. the network output,
/// one row per sample) through the cached forward pass. Returns the flat
/// parameter gradient.
pub fn backward(
    spec: &NetSpec,
    params: &NetParams,
    cache: &ForwardCache,
    d_out: &Mat,
) -> Result<Vec<f64>, NumericsError> {
    let mut grad = vec![0.0; spec.param_count()];
    let mut delta = d_out.clone();
    for l in (0..spec.layer_count()).rev() {
        if spec.activated(l) {
            let z = &cache.pre[l];
            match spec.activation {
                Activation::Relu => {
                    for (d, &zv) in delta.as_mut_slice().iter_mut().zip(z.as_slice()) {
                        if zv <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::Gelu => {
                    for (d, &zv) in delta.as_mut_slice().iter_mut().zip(z.as_slice()) {
                        *d *= gelu_grad(zv);
                    }
                }
            }
        }
        let (w_off, b_off, fan_in, fan_out) = spec.layer_layout(l);
        // dW = deltaᵀ · a_in, db = column sums of delta
        let dw = delta.t_mul(&cache.acts[l]);
        debug_assert_eq!(dw.rows(), fan_out);
        debug_assert_eq!(dw.cols(), fan_in);
        grad[w_off..w_off + fan_in * fan_out].copy_from_slice(dw.as_slice());
        grad[b_off..b_off + fan_out].copy_from_slice(&delta.col_sums());
        if l > 0 {
            let (w, _) = params.weights(spec, l);
            let wmat = Mat::from_vec(fan_out, fan_in, w.to_vec());
            delta = delta.mul(&wmat);
        }
    }
    Ok(grad)
}
