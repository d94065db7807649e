//! Experiment configuration: a JSON document that round-trips into the
//! summary output, with defaults materialized.

use std::path::PathBuf;

use graphcp_core::engines::{EngineKind, EvalPolicy, VoteCombine};
use graphcp_core::model::TrainConfig;
use graphcp_core::scores::ScoreKind;
use graphcp_core::sequence::SequenceKind;
use serde::{Deserialize, Serialize};

/// Where the graph comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Homophilous stochastic block model sampled at startup.
    Synthetic {
        nodes: usize,
        classes: usize,
        p_in: f64,
        p_out: f64,
        feat_dim: usize,
        feat_separation: f64,
        #[serde(default)]
        graph_seed: u64,
    },
    /// Edge list + feature CSV + label CSV on disk. With `scores_dir` set,
    /// the model is bypassed and per-timestep probability matrices are read
    /// from `probs_t{t}.csv` files in that directory.
    Files {
        edges: PathBuf,
        features: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        scores_dir: Option<PathBuf>,
    },
}

/// Evaluation-time policy, config-level (`final` resolves against the
/// schedule length at run time).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicyConfig {
    #[default]
    UponArrival,
    FixedFinal,
    FixedTime {
        t: usize,
    },
    RandomTime {
        policy_seed: u64,
    },
}

impl PolicyConfig {
    pub fn resolve(&self, schedule_len: usize) -> EvalPolicy {
        match *self {
            PolicyConfig::UponArrival => EvalPolicy::UponArrival,
            PolicyConfig::FixedFinal => EvalPolicy::FixedTime { t: schedule_len },
            PolicyConfig::FixedTime { t } => EvalPolicy::FixedTime { t },
            PolicyConfig::RandomTime { policy_seed } => EvalPolicy::RandomTime { policy_seed },
        }
    }
}

/// Model hyperparameters plus the training/validation split sizes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hops: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub train_per_class: usize,
    pub val_nodes: usize,
    pub split_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            hops: t.hops,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            l2: t.l2,
            train_per_class: 20,
            val_nodes: 20,
            split_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hops: self.hops,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            l2: self.l2,
        }
    }
}

fn default_score() -> ScoreKind {
    ScoreKind::Aps
}
fn default_naps_k() -> usize {
    1
}
fn default_vote_k() -> usize {
    10
}
fn default_vote_fraction() -> f64 {
    0.5
}

/// The whole experiment: data, sequence kind, engines, score, seeds, policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub sequence: SequenceKind,
    pub engines: Vec<EngineKind>,
    #[serde(default = "default_score")]
    pub score: ScoreKind,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub model: ModelConfig,
    /// Calibration prefix size: nodes for node sequences, edges for edge
    /// sequences.
    pub calibration_size: usize,
    #[serde(default = "default_naps_k")]
    pub naps_k: usize,
    #[serde(default = "default_vote_k")]
    pub vote_k: usize,
    #[serde(default = "default_vote_fraction")]
    pub vote_subgraph_fraction: f64,
    #[serde(default)]
    pub vote_combine: VoteCombine,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(
            self.alpha > 0.0 && self.alpha < 1.0,
            "alpha must lie in (0, 1), got {}",
            self.alpha
        );
        anyhow::ensure!(!self.seeds.is_empty(), "seeds must be nonempty");
        anyhow::ensure!(!self.engines.is_empty(), "engines must be nonempty");
        anyhow::ensure!(self.calibration_size >= 1, "calibration_size must be >= 1");
        Ok(())
    }
}
