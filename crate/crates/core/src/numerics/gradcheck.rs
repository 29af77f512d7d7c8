//! Finite-difference validation of the backward pass.

use super::matrix::Mat;
use super::net::{backward, forward_cached, NetParams, NetSpec};
use super::rng::Rng;
use super::NumericsError;

/// Central-difference step on 64-bit reals.
pub const FD_STEP: f64 = 1e-5;

/// Compares the analytic parameter gradient against central differences on
/// up to `samples` coordinates (all coordinates if `samples` covers them).
///
/// `loss` maps a network output to (loss value, dloss/doutput). Returns the
/// max over checked coordinates of |analytic − numeric| / max(|analytic|,
/// |numeric|, 1e-8).
pub fn grad_check<L>(
    spec: &NetSpec,
    params: &NetParams,
    input: &[f64],
    loss: L,
    samples: usize,
    rng: &mut Rng,
) -> Result<f64, NumericsError>
where
    L: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let batch = Mat::from_vec(1, input.len(), input.to_vec());
    let cache = forward_cached(spec, params, &batch)?;
    let (_, d_out) = loss(cache.output().row(0));
    let d_mat = Mat::from_vec(1, d_out.len(), d_out);
    let analytic = backward(spec, params, &cache, &d_mat)?;

    let n = params.len();
    let coords: Vec<usize> = if samples >= n {
        (0..n).collect()
    } else {
        // sample without replacement
        let mut picked = std::collections::BTreeSet::new();
        while picked.len() < samples {
            picked.insert(rng.index(n));
        }
        picked.into_iter().collect()
    };

    let mut perturbed = params.clone();
    let mut max_rel = 0.0f64;
    for &i in &coords {
        let orig = perturbed.as_slice()[i];
        perturbed.as_mut_slice()[i] = orig + FD_STEP;
        let plus = eval_loss(spec, &perturbed, &batch, &loss)?;
        perturbed.as_mut_slice()[i] = orig - FD_STEP;
        let minus = eval_loss(spec, &perturbed, &batch, &loss)?;
        perturbed.as_mut_slice()[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(max_rel)
}

fn eval_loss<L>(
    spec: &NetSpec,
    params: &NetParams,
    batch: &Mat,
    loss: &L,
) -> Result<f64, NumericsError>
where
    L: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let cache = forward_cached(spec, params, batch)?;
    Ok(loss(cache.output().row(0)).0)
}
