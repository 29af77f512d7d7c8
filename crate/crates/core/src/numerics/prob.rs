//! Probability utilities shared by the action models.

use super::NumericsError;

/// Probability floor used when taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax (max-subtracted). Output entries lie in
/// (0, 1) and sum to 1 within 1e-9.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if logits.is_empty() {
        return Err(NumericsError::EmptyInput("softmax"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(NumericsError::NonFiniteInput("softmax"));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// −log p(true action), with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy(probabilities: &[f64], true_index: usize) -> Result<f64, NumericsError> {
    if true_index >= probabilities.len() {
        return Err(NumericsError::IndexOutOfRange {
            index: true_index,
            len: probabilities.len(),
        });
    }
    Ok(-probabilities[true_index].max(PROB_FLOOR).ln())
}
