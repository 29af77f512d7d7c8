//! Deep ensemble of inverse-dynamics action models: each member predicts
//! the action that effects a transition between two consecutive states;
//! the ensemble mean of the per-member softmax outputs carries the
//! predictive entropy used as the replanning signal.
//!
//! Member training is independent given its seed, so members could be
//! trained in parallel; a trained [`Ensemble`] is immutable and safe for
//! concurrent prediction.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{sample_windows, Dataset, NormStats};
use crate::numerics::{
    self, forward, softmax, Activation, Mat, NetParams, NetSpec, OptimState, OutputHead, Rng,
    PROB_FLOOR,
};
use crate::sim::{Action, ACTION_COUNT};

#[derive(Debug, thiserror::Error)]
pub enum InvdynError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("an ensemble needs at least one member")]
    EmptyEnsemble,
    #[error("probability vector contains a negative or non-finite entry")]
    BadProbability,
    #[error("io error on {0}: {1}")]
    Io(PathBuf, String),
    #[error("bad ensemble manifest: {0}")]
    BadManifest(String),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
    #[error(transparent)]
    Data(#[from] crate::datagen::DataError),
}

/// Natural-log Shannon entropy with 0·log 0 := 0. Rejects negative or
/// non-finite entries.
pub fn entropy(probabilities: &[f64]) -> Result<f64, InvdynError> {
    let mut h = 0.0;
    for &p in probabilities {
        if p < 0.0 || !p.is_finite() {
            return Err(InvdynError::BadProbability);
        }
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    Ok(h)
}

/// Ensemble output for one state pair: mean action probabilities, their
/// entropy in nats, and the greedy action (ties go to the lowest id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub probabilities: Vec<f64>,
    pub entropy: f64,
    pub action: Action,
}

/// One inverse-dynamics member: an MLP from concatenated normalized
/// (s_t, s_{t+1}) to action logits.
#[derive(Debug, Clone)]
pub struct ActionModel {
    pub spec: NetSpec,
    pub params: NetParams,
}

impl ActionModel {
    pub fn new(state_dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self, InvdynError> {
        let mut widths = vec![2 * state_dim];
        widths.extend_from_slice(hidden);
        widths.push(ACTION_COUNT);
        let spec = NetSpec::new(widths, Activation::Relu, OutputHead::Linear)?;
        let params = NetParams::init(&spec, rng);
        Ok(ActionModel { spec, params })
    }

    pub fn state_dim(&self) -> usize {
        self.spec.input_dim() / 2
    }

    /// Action logits for a normalized state pair.
    pub fn logits(&self, pair: &[f64]) -> Result<Vec<f64>, InvdynError> {
        Ok(forward(&self.spec, &self.params, pair)?)
    }
}

/// Training settings for one ensemble.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct InvdynTrainConfig {
    pub hidden: Vec<usize>,
    pub train_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for InvdynTrainConfig {
    fn default() -> Self {
        InvdynTrainConfig {
            hidden: vec![256, 256],
            train_steps: 3000,
            batch_size: 256,
            learning_rate: 1e-3,
        }
    }
}

/// M identically specified action models trained from different seeds, with
/// the shared normalization stats.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub members: Vec<ActionModel>,
    pub stats: NormStats,
    pub seeds: Vec<u64>,
}

impl Ensemble {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn state_dim(&self) -> usize {
        self.members[0].state_dim()
    }

    /// Mean probabilities, entropy, and greedy action for a raw
    /// (unnormalized) state pair.
    pub fn predict(&self, s: &[f64], s_next: &[f64]) -> Result<EnsemblePrediction, InvdynError> {
        let d = self.state_dim();
        if s.len() != d || s_next.len() != d {
            return Err(InvdynError::ShapeMismatch {
                expected: d,
                got: if s.len() != d { s.len() } else { s_next.len() },
            });
        }
        let mut pair = self.stats.normalize(s);
        pair.extend(self.stats.normalize(s_next));

        let mut mean = vec![0.0; ACTION_COUNT];
        for member in &self.members {
            let probs = softmax(&member.logits(&pair)?)?;
            for (m, p) in mean.iter_mut().zip(&probs) {
                *m += p;
            }
        }
        let inv_m = 1.0 / self.members.len() as f64;
        for m in &mut mean {
            *m *= inv_m;
        }
        let u = entropy(&mean)?;
        let mut best = 0;
        for (i, &p) in mean.iter().enumerate() {
            if p > mean[best] {
                best = i;
            }
        }
        Ok(EnsemblePrediction {
            entropy: u,
            action: Action::from_id(best).expect("dense ids"),
            probabilities: mean,
        })
    }

    /// Greedy-action accuracy of one member over every adjacent state pair
    /// in the dataset.
    pub fn member_accuracy(
        &self,
        member: usize,
        dataset: &Dataset,
    ) -> Result<f64, InvdynError> {
        let pairs = crate::datagen::all_windows(dataset, &self.stats, 2);
        if pairs.is_empty() {
            return Err(InvdynError::Data(crate::datagen::DataError::NoWindow {
                h: 2,
            }));
        }
        let model = &self.members[member];
        let mut hits = 0usize;
        for w in &pairs {
            let logits = model.logits(&w.states)?;
            let mut best = 0;
            for (i, &l) in logits.iter().enumerate() {
                if l > logits[best] {
                    best = i;
                }
            }
            if best == w.actions[0].id() {
                hits += 1;
            }
        }
        Ok(hits as f64 / pairs.len() as f64)
    }

    /// Ensemble-mean accuracy over every adjacent state pair.
    pub fn accuracy(&self, dataset: &Dataset) -> Result<f64, InvdynError> {
        let d = self.state_dim();
        let pairs = crate::datagen::all_windows(dataset, &self.stats, 2);
        if pairs.is_empty() {
            return Err(InvdynError::Data(crate::datagen::DataError::NoWindow {
                h: 2,
            }));
        }
        let mut hits = 0usize;
        for w in &pairs {
            // states are already normalized; bypass predict's re-normalization
            let mut mean = vec![0.0; ACTION_COUNT];
            for member in &self.members {
                let probs = softmax(&member.logits(&w.states)?)?;
                for (m, p) in mean.iter_mut().zip(&probs) {
                    *m += p;
                }
            }
            let mut best = 0;
            for (i, &p) in mean.iter().enumerate() {
                if p > mean[best] {
                    best = i;
                }
            }
            if best == w.actions[0].id() {
                hits += 1;
            }
            debug_assert_eq!(w.states.len(), 2 * d);
        }
        Ok(hits as f64 / pairs.len() as f64)
    }
}

/// Trains one member on (s_t, s_{t+1}) → a_t pairs with cross-entropy loss.
fn train_member(
    dataset: &Dataset,
    stats: &NormStats,
    cfg: &InvdynTrainConfig,
    seed: u64,
) -> Result<ActionModel, InvdynError> {
    let mut init_rng = Rng::new(seed).split(0);
    let mut shuffle_rng = Rng::new(seed).split(1);
    let mut model = ActionModel::new(stats.dim(), &cfg.hidden, &mut init_rng)?;
    let mut opt = OptimState::new(model.spec.param_count()).with_learning_rate(cfg.learning_rate);

    let in_dim = 2 * stats.dim();
    for _ in 0..cfg.train_steps {
        let windows = sample_windows(dataset, stats, 2, cfg.batch_size, &mut shuffle_rng)?;
        let batch = windows.len();
        let mut inputs = Vec::with_capacity(batch * in_dim);
        let mut labels = Vec::with_capacity(batch);
        for w in &windows {
            inputs.extend_from_slice(&w.states);
            labels.push(w.actions[0].id());
        }
        let inputs = Mat::from_vec(batch, in_dim, inputs);
        numerics::train_step(&model.spec, &mut model.params, &mut opt, &inputs, |out| {
            let mut grad = Mat::zeros(batch, ACTION_COUNT);
            let mut loss = 0.0;
            for r in 0..batch {
                let probs = softmax(out.row(r))?;
                let label = labels[r];
                loss -= probs[label].max(PROB_FLOOR).ln();
                let grow = grad.row_mut(r);
                for (a, &p) in probs.iter().enumerate() {
                    let target = if a == label { 1.0 } else { 0.0 };
                    grow[a] = (p - target) / batch as f64;
                }
            }
            Ok((loss / batch as f64, grad))
        })?;
    }
    Ok(model)
}

/// Trains M members on the same data, seeded base+m, differing only in
/// their init and shuffle streams.
pub fn train_ensemble(
    dataset: &Dataset,
    stats: &NormStats,
    members: usize,
    base_seed: u64,
    cfg: &InvdynTrainConfig,
) -> Result<Ensemble, InvdynError> {
    if members == 0 {
        return Err(InvdynError::EmptyEnsemble);
    }
    if dataset.is_empty() {
        return Err(InvdynError::Data(crate::datagen::DataError::EmptyDataset));
    }
    let seeds: Vec<u64> = (0..members as u64).map(|m| base_seed + m).collect();
    let trained = seeds
        .iter()
        .map(|&s| train_member(dataset, stats, cfg, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ensemble {
        members: trained,
        stats: stats.clone(),
        seeds,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleManifest {
    members: usize,
    seeds: Vec<u64>,
    state_dim: usize,
    norm_stats: NormStats,
    norm_stats_hash: String,
}

/// Saves the ensemble as a directory: one checkpoint per member plus a
/// JSON manifest.
pub fn save_ensemble(ensemble: &Ensemble, dir: &Path) -> Result<(), InvdynError> {
    std::fs::create_dir_all(dir).map_err(|e| InvdynError::Io(dir.into(), e.to_string()))?;
    for (i, member) in ensemble.members.iter().enumerate() {
        let path = dir.join(format!("member_{i:02}.adpn"));
        numerics::save_net(
            &path,
            &member.spec,
            &member.params,
            Some(ensemble.seeds[i]),
            serde_json::Value::Null,
        )?;
    }
    let manifest = EnsembleManifest {
        members: ensemble.member_count(),
        seeds: ensemble.seeds.clone(),
        state_dim: ensemble.state_dim(),
        norm_stats: ensemble.stats.clone(),
        norm_stats_hash: ensemble.stats.hash(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| InvdynError::Io(path.clone(), e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| InvdynError::Io(path, e.to_string()))
}

pub fn load_ensemble(dir: &Path) -> Result<Ensemble, InvdynError> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| InvdynError::Io(manifest_path.clone(), e.to_string()))?;
    let manifest: EnsembleManifest =
        serde_json::from_str(&text).map_err(|e| InvdynError::BadManifest(e.to_string()))?;
    if manifest.members == 0 {
        return Err(InvdynError::EmptyEnsemble);
    }
    let mut members = Vec::with_capacity(manifest.members);
    for i in 0..manifest.members {
        let path = dir.join(format!("member_{i:02}.adpn"));
        let (spec, params, _, _) = numerics::load_net(&path)?;
        if spec.input_dim() != 2 * manifest.state_dim || spec.output_dim() != ACTION_COUNT {
            return Err(InvdynError::BadManifest(format!(
                "member {i} spec disagrees with manifest"
            )));
        }
        members.push(ActionModel { spec, params });
    }
    Ok(Ensemble {
        members,
        stats: manifest.norm_stats,
        seeds: manifest.seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_reference_values() {
        assert_eq!(entropy(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let u = entropy(&[0.2; 5]).unwrap();
        assert!((u - 5.0f64.ln()).abs() < 1e-12);
        let u = entropy(&[0.5, 0.25, 0.25, 0.0, 0.0]).unwrap();
        assert!((u - 1.5 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_negative_entries() {
        assert!(matches!(
            entropy(&[0.5, -0.1, 0.6]),
            Err(InvdynError::BadProbability)
        ));
        assert!(entropy(&[f64::NAN, 1.0]).is_err());
    }

    fn toy_stats(d: usize) -> NormStats {
        NormStats {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    fn fresh_ensemble(members: usize, seed: u64) -> Ensemble {
        let d = 3;
        let seeds: Vec<u64> = (0..members as u64).map(|m| seed + m).collect();
        let built = seeds
            .iter()
            .map(|&s| ActionModel::new(d, &[16], &mut Rng::new(s)).unwrap())
            .collect();
        Ensemble {
            members: built,
            stats: toy_stats(d),
            seeds,
        }
    }

    #[test]
    fn single_member_ensemble_matches_member() {
        let e = fresh_ensemble(1, 10);
        let s = vec![0.1, -0.2, 0.3];
        let s2 = vec![0.2, -0.1, 0.4];
        let pred = e.predict(&s, &s2).unwrap();
        let mut pair = s.clone();
        pair.extend_from_slice(&s2);
        let direct = softmax(&e.members[0].logits(&pair).unwrap()).unwrap();
        assert_eq!(pred.probabilities, direct);
    }

    #[test]
    fn identical_seeds_give_identical_members() {
        let a = ActionModel::new(4, &[8, 8], &mut Rng::new(3)).unwrap();
        let b = ActionModel::new(4, &[8, 8], &mut Rng::new(3)).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn member_permutation_leaves_prediction_unchanged() {
        let mut e = fresh_ensemble(4, 50);
        let s = vec![0.5, 0.5, -0.5];
        let s2 = vec![0.4, 0.6, -0.4];
        let before = e.predict(&s, &s2).unwrap();
        e.members.reverse();
        let after = e.predict(&s, &s2).unwrap();
        assert_eq!(before.action, after.action);
        assert!((before.entropy - after.entropy).abs() < 1e-12);
        for (a, b) in before.probabilities.iter().zip(&after.probabilities) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn prediction_entropy_is_bounded() {
        let e = fresh_ensemble(3, 77);
        let mut rng = Rng::new(123);
        for _ in 0..50 {
            let s = rng.normal_vec(3);
            let s2 = rng.normal_vec(3);
            let pred = e.predict(&s, &s2).unwrap();
            assert!(pred.entropy >= 0.0);
            assert!(pred.entropy <= (ACTION_COUNT as f64).ln() + 1e-12);
            let sum: f64 = pred.probabilities.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_rejects_wrong_dimensions() {
        let e = fresh_ensemble(2, 8);
        assert!(matches!(
            e.predict(&[0.0; 2], &[0.0; 3]),
            Err(InvdynError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn argmax_prefers_lowest_id_on_ties() {
        // two members emitting one-hot on different actions -> mean is a tie
        let probs = vec![0.5, 0.5, 0.0, 0.0, 0.0];
        let u = entropy(&probs).unwrap();
        assert!((u - 2.0f64.ln()).abs() < 1e-12);
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        assert_eq!(best, 0, "tie resolves to the lowest action id");
    }

    #[test]
    fn ensemble_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let e = fresh_ensemble(3, 400);
        save_ensemble(&e, dir.path()).unwrap();
        let loaded = load_ensemble(dir.path()).unwrap();
        assert_eq!(loaded.member_count(), 3);
        assert_eq!(loaded.seeds, e.seeds);
        for (a, b) in loaded.members.iter().zip(&e.members) {
            assert_eq!(a.params, b.params);
        }
    }
}
