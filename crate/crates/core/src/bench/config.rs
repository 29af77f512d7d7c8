//! Top-level run configuration, read from a single JSON document. Every
//! field has a default, so a missing or empty config file is valid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::invdyn::InvdynTrainConfig;
use crate::sim::EnvConfig;

use super::BenchError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DatagenSettings {
    /// Probability of a uniform random action in the behavior policy.
    pub noise: f64,
}

impl Default for DatagenSettings {
    fn default() -> Self {
        DatagenSettings { noise: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DiffuserSettings {
    /// Plan horizon: states per generated window.
    pub horizon: usize,
    /// Diffusion steps K.
    pub diffusion_steps: usize,
    pub hidden: Vec<usize>,
    pub time_embed_dim: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for DiffuserSettings {
    fn default() -> Self {
        DiffuserSettings {
            horizon: 16,
            diffusion_steps: 100,
            hidden: vec![512, 512, 512],
            time_embed_dim: 64,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct InvdynSettings {
    pub members: usize,
    #[serde(flatten)]
    pub train: InvdynTrainConfig,
}

impl Default for InvdynSettings {
    fn default() -> Self {
        InvdynSettings {
            members: 5,
            train: InvdynTrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PlannerSettings {
    /// Default replanning threshold in nats.
    pub epsilon: f64,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        PlannerSettings { epsilon: 0.1 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct AppConfig {
    pub env: EnvConfig,
    pub datagen: DatagenSettings,
    pub diffuser: DiffuserSettings,
    pub invdyn: InvdynSettings,
    pub planner: PlannerSettings,
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<AppConfig, BenchError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.into(), e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| BenchError::BadConfig(e.to_string()))
    }
}
