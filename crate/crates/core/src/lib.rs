//! Conformal prediction for inductively growing graphs.
//!
//! The crate provides the full pipeline for studying coverage of conformal
//! prediction sets when a graph grows node by node or edge by edge after
//! calibration:
//!
//! - [`quantile`]: weighted quantile calibration and prediction-set
//!   construction.
//! - [`laws`]: exact theoretical coverage distributions (Beta and
//!   hypergeometric) used as validation oracles.
//! - [`graph`] / [`sequence`] / [`generators`]: graph storage, exchangeable
//!   arrival schedules, subgraph views, and synthetic samplers.
//! - [`scores`]: TPS / APS / DAPS conformity scores.
//! - [`model`]: a minimal trainable permutation-equivariant node classifier.
//! - [`engines`]: the calibration engines (naive, node-exchangeable,
//!   edge-exchangeable, neighbourhood-restricted, subgraph voting) and the
//!   sequence evaluation driver.
//! - [`eval`]: coverage bookkeeping, empirical metrics, and comparison
//!   against the theoretical laws.
//!
//! All randomness flows through seeded ChaCha streams (see [`rng`]), so every
//! simulation is reproducible from its configuration.

pub mod engines;
pub mod error;
pub mod eval;
pub mod generators;
pub mod graph;
pub mod laws;
pub mod model;
pub mod numeric;
pub mod quantile;
pub mod rng;
pub mod scores;
pub mod sequence;

pub use engines::{
    evaluate_sequence, CalibrationSet, EngineConfig, EngineKind, EvalPolicy, Scorer,
    SequenceOutcome, VoteCombine,
};
pub use error::{CpError, CpResult};
pub use eval::PredictionSetRecord;
pub use graph::Graph;
pub use laws::CoverageLawParams;
pub use model::{EquivariantClassifier, ProbSource, TrainConfig};
pub use scores::{ProbMatrix, ScoreKind, ScoreMatrix};
pub use sequence::{ArrivalSchedule, GraphView, SequenceKind};
