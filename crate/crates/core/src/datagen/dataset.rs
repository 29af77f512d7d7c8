//! Offline dataset container and its JSON-lines persistence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sim::{Action, EnvConfig};

use super::DataError;

/// One environment transition with its episode bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    pub episode: usize,
    pub step: usize,
}

/// Header line of a dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub kind: String,
    pub version: u32,
    pub env: EnvConfig,
    pub noise: f64,
    pub seed: u64,
    pub episodes: usize,
    pub steps: usize,
    pub obs_dim: usize,
}

pub const DATASET_KIND: &str = "adaplan-dataset";

/// Ordered transitions with an episode index. Every episode has at least
/// 2 transitions and contiguous step indices starting at 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    transitions: Vec<Transition>,
    episode_offsets: Vec<usize>,
    obs_dim: usize,
}

impl Dataset {
    pub fn new(obs_dim: usize) -> Self {
        Dataset {
            transitions: Vec::new(),
            episode_offsets: Vec::new(),
            obs_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn episode_count(&self) -> usize {
        self.episode_offsets.len()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.transitions[i]
    }

    /// Transitions of episode `e`.
    pub fn episode(&self, e: usize) -> &[Transition] {
        let start = self.episode_offsets[e];
        let end = self
            .episode_offsets
            .get(e + 1)
            .copied()
            .unwrap_or(self.transitions.len());
        &self.transitions[start..end]
    }

    /// Appends a complete episode, re-tagging its ids.
    pub fn push_episode(&mut self, mut steps: Vec<Transition>) -> Result<(), DataError> {
        if steps.len() < 2 {
            return Err(DataError::EpisodeTooShort { len: steps.len() });
        }
        let episode = self.episode_offsets.len();
        let len = steps.len();
        for (i, t) in steps.iter_mut().enumerate() {
            if t.obs.len() != self.obs_dim || t.next_obs.len() != self.obs_dim {
                return Err(DataError::ObsDimMismatch {
                    expected: self.obs_dim,
                    got: t.obs.len(),
                });
            }
            t.episode = episode;
            t.step = i;
            if t.done && i + 1 != len {
                return Err(DataError::Malformed(
                    "done flag set before the episode end".into(),
                ));
            }
        }
        self.episode_offsets.push(self.transitions.len());
        self.transitions.extend(steps);
        Ok(())
    }

    /// Fraction of episodes that ended in a collision. An episode ended in
    /// collision iff its final transition is `done` with reward 0 before
    /// the step limit.
    pub fn collision_rate(&self, max_steps: usize) -> f64 {
        if self.episode_count() == 0 {
            return 0.0;
        }
        let collided = (0..self.episode_count())
            .filter(|&e| {
                let ep = self.episode(e);
                ep.len() < max_steps && ep.last().map_or(false, |t| t.done)
            })
            .count();
        collided as f64 / self.episode_count() as f64
    }

    pub fn write_jsonl(&self, path: &Path, header: &DatasetHeader) -> Result<(), DataError> {
        let file = File::create(path).map_err(|e| DataError::Io(path.into(), e.to_string()))?;
        let mut w = BufWriter::new(file);
        let io_err = |e: std::io::Error| DataError::Io(path.into(), e.to_string());
        serde_json::to_writer(&mut w, header).map_err(|e| DataError::Io(path.into(), e.to_string()))?;
        w.write_all(b"\n").map_err(io_err)?;
        for t in &self.transitions {
            serde_json::to_writer(&mut w, t).map_err(|e| DataError::Io(path.into(), e.to_string()))?;
            w.write_all(b"\n").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<(Dataset, DatasetHeader), DataError> {
        let file = File::open(path).map_err(|e| DataError::Io(path.into(), e.to_string()))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| DataError::Malformed("empty dataset file".into()))?
            .map_err(|e| DataError::Io(path.into(), e.to_string()))?;
        let header: DatasetHeader = serde_json::from_str(&header_line)
            .map_err(|e| DataError::Malformed(format!("bad header: {e}")))?;
        if header.kind != DATASET_KIND {
            return Err(DataError::Malformed(format!(
                "unknown dataset kind {:?}",
                header.kind
            )));
        }
        let mut ds = Dataset::new(header.obs_dim);
        let mut current: Vec<Transition> = Vec::new();
        let mut current_episode = 0usize;
        for line in lines {
            let line = line.map_err(|e| DataError::Io(path.into(), e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let t: Transition = serde_json::from_str(&line)
                .map_err(|e| DataError::Malformed(format!("bad transition: {e}")))?;
            if t.episode != current_episode && !current.is_empty() {
                ds.push_episode(std::mem::take(&mut current))?;
                current_episode = t.episode;
            } else if current.is_empty() {
                current_episode = t.episode;
            }
            current.push(t);
        }
        if !current.is_empty() {
            ds.push_episode(current)?;
        }
        if ds.len() != header.steps || ds.episode_count() != header.episodes {
            return Err(DataError::Malformed(
                "header counts disagree with file body".into(),
            ));
        }
        Ok((ds, header))
    }
}
