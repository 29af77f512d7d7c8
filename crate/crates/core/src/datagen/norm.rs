//! Per-dimension observation normalization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::Dataset;
use super::DataError;

/// Standard deviations below this are floored; the corresponding dimension
/// is effectively constant.
pub const STD_FLOOR: f64 = 1e-6;

/// Per-dimension mean and standard deviation of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.dim());
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect()
    }

    /// True for dimensions whose std hit the floor (near-constant data).
    pub fn is_floored(&self, dim: usize) -> bool {
        self.std[dim] <= STD_FLOOR
    }

    /// Content hash over the canonical JSON encoding, used to detect model
    /// and dataset normalization mismatches.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("stats serialize");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let json = serde_json::to_string(self).expect("stats serialize");
        std::fs::write(path, json).map_err(|e| DataError::Io(path.into(), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<NormStats, DataError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| DataError::Io(path.into(), e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| DataError::Malformed(format!("bad stats: {e}")))
    }
}

/// Population statistics over every observation in the dataset.
pub fn norm_stats(dataset: &Dataset) -> Result<NormStats, DataError> {
    if dataset.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let d = dataset.obs_dim();
    let n = dataset.len() as f64;
    let mut mean = vec![0.0; d];
    for t in dataset.transitions() {
        for (m, &x) in mean.iter_mut().zip(&t.obs) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for t in dataset.transitions() {
        for ((v, &m), &x) in var.iter_mut().zip(&mean).zip(&t.obs) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var
        .into_iter()
        .map(|v| (v / n).sqrt().max(STD_FLOOR))
        .collect();
    Ok(NormStats { mean, std })
}
