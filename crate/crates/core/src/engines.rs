//! Calibration engines mapping (view, scores, calibration set, alpha) to
//! per-node prediction sets, plus the sequence evaluation driver.
//!
//! Engines:
//! - `naive`: threshold frozen at calibration time, never recomputed.
//! - `nodeex`: scores and threshold recomputed conditional on every view.
//! - `edgeex`: like `nodeex` with calibration weights `1 / deg(v | G_t)`.
//! - `naps`: per-test-node recalibration restricted to calibration nodes
//!   within `k` hops; may be inapplicable.
//! - `subgraph_vote`: transductive randomized voting over `K` random
//!   subgraphs containing the test node and the calibration set.
//!
//! Evaluation masks are fixed by the policy before any prediction set is
//! computed; the policy never observes sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CpError, CpResult};
use crate::eval::{EvaluationMask, PredictionSetRecord, TimestepAggregate};
use crate::graph::Graph;
use crate::model::ProbSource;
use crate::quantile::{conformal_threshold, prediction_set, WeightedSample};
use crate::scores::{aps_noise, aps_scores, daps_scores, tps_scores, ScoreKind, ScoreMatrix};
use crate::sequence::{degree_in_view, view_at, ArrivalSchedule, GraphView};

/// Which calibration engine to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Naive,
    #[serde(rename = "nodeex")]
    NodeEx,
    #[serde(rename = "edgeex")]
    EdgeEx,
    Naps,
    SubgraphVote,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Naive => "naive",
            EngineKind::NodeEx => "nodeex",
            EngineKind::EdgeEx => "edgeex",
            EngineKind::Naps => "naps",
            EngineKind::SubgraphVote => "subgraph_vote",
        }
    }
}

/// How subgraph votes combine into one prediction set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VoteCombine {
    /// Include label `y` with probability `votes(y) / K` (one seeded
    /// Bernoulli draw per label).
    #[default]
    Bernoulli,
    /// Average scores across subgraphs, then run one conditional CP.
    MeanScore,
}

/// Engine configuration shared by all engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub engine: EngineKind,
    pub alpha: f64,
    pub score: ScoreKind,
    #[serde(default = "default_naps_k")]
    pub naps_k: usize,
    #[serde(default = "default_vote_k")]
    pub vote_k: usize,
    #[serde(default = "default_vote_fraction")]
    pub vote_subgraph_fraction: f64,
    #[serde(default)]
    pub vote_combine: VoteCombine,
    pub seed: u64,
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

impl EngineConfig {
    pub fn new(engine: EngineKind, alpha: f64, score: ScoreKind, seed: u64) -> CpResult<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CpError::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0, 1), got {alpha}"),
            });
        }
        Ok(Self {
            engine,
            alpha,
            score,
            naps_k: default_naps_k(),
            vote_k: default_vote_k(),
            vote_subgraph_fraction: default_vote_fraction(),
            vote_combine: VoteCombine::default(),
            seed,
        })
    }

    pub fn with_naps_k(mut self, k: usize) -> Self {
        self.naps_k = k;
        self
    }

    pub fn with_votes(mut self, k: usize, fraction: f64, combine: VoteCombine) -> Self {
        self.vote_k = k;
        self.vote_subgraph_fraction = fraction;
        self.vote_combine = combine;
        self
    }
}

/// The held-out labeled nodes whose true-label scores calibrate thresholds.
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    members: Vec<u32>,
    true_labels: Vec<u32>,
    frozen_scores: Option<Vec<f64>>,
}

impl CalibrationSet {
    pub fn new(members: Vec<u32>, true_labels: Vec<u32>) -> CpResult<Self> {
        if members.is_empty() {
            return Err(CpError::EmptyInput {
                what: "calibration set",
            });
        }
        if members.len() != true_labels.len() {
            return Err(CpError::DimensionMismatch {
                what: "calibration labels",
                expected: members.len(),
                actual: true_labels.len(),
            });
        }
        Ok(Self {
            members,
            true_labels,
            frozen_scores: None,
        })
    }

    /// Calibration members of a schedule with labels read off the base graph.
    pub fn from_schedule(schedule: &ArrivalSchedule, base: &Graph) -> CpResult<Self> {
        let members = schedule.calibration_nodes().to_vec();
        let labels = members.iter().map(|&v| base.label(v)).collect();
        Self::new(members, labels)
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn true_labels(&self) -> &[u32] {
        &self.true_labels
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.members.contains(&v)
    }

    /// Frozen true-label scores, when a naive calibration materialized them.
    pub fn frozen_scores(&self) -> Option<&[f64]> {
        self.frozen_scores.as_deref()
    }

    pub fn with_frozen_scores(mut self, scores: Vec<f64>) -> CpResult<Self> {
        if scores.len() != self.members.len() {
            return Err(CpError::DimensionMismatch {
                what: "frozen scores",
                expected: self.members.len(),
                actual: scores.len(),
            });
        }
        self.frozen_scores = Some(scores);
        Ok(self)
    }
}

/// Computes score matrices for views from a probability source, one score
/// kind, and a seed for tie-breaking noise streams.
pub struct Scorer<'a, P: ProbSource + ?Sized> {
    source: &'a P,
    kind: ScoreKind,
    seed: u64,
}

impl<'a, P: ProbSource + ?Sized> Scorer<'a, P> {
    pub fn new(source: &'a P, kind: ScoreKind, seed: u64) -> Self {
        Self { source, kind, seed }
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn scores(&self, view: &GraphView<'_>) -> CpResult<ScoreMatrix> {
        self.scores_salted(view, 0)
    }

    /// `salt` separates replicate computations at the same timestep so each
    /// gets fresh tie-breaking noise.
    pub fn scores_salted(&self, view: &GraphView<'_>, salt: u64) -> CpResult<ScoreMatrix> {
        let probs = self.source.probabilities(view)?;
        if probs.num_rows() != view.num_active() {
            return Err(CpError::DimensionMismatch {
                what: "probability rows",
                expected: view.num_active(),
                actual: probs.num_rows(),
            });
        }
        let t = view.timestep();
        match self.kind {
            ScoreKind::Tps => Ok(tps_scores(&probs, t)),
            ScoreKind::Aps => {
                let u = aps_noise(self.seed, t, salt, view.active_nodes());
                aps_scores(&probs, &u, t, crate::rng::stream_key(self.seed, &[t as u64, salt]))
            }
            ScoreKind::Daps { lambda } => {
                let u = aps_noise(self.seed, t, salt, view.active_nodes());
                let base = aps_scores(
                    &probs,
                    &u,
                    t,
                    crate::rng::stream_key(self.seed, &[t as u64, salt]),
                )?;
                daps_scores(&base, view, lambda)
            }
        }
    }
}

/// True-label scores of the calibration members in a view.
fn cal_true_scores(
    cal: &CalibrationSet,
    view: &GraphView<'_>,
    scores: &ScoreMatrix,
) -> CpResult<Vec<f64>> {
    cal.members
        .iter()
        .zip(&cal.true_labels)
        .map(|(&v, &y)| {
            let row = view.row_of(v).ok_or(CpError::InactiveNode {
                node: v,
                timestep: view.timestep(),
            })?;
            Ok(scores.values()[[row, y as usize]])
        })
        .collect()
}

fn uniform_samples(scores: &[f64]) -> Vec<WeightedSample> {
    scores
        .iter()
        .map(|&score| WeightedSample { score, weight: 1.0 })
        .collect()
}

fn validate_eval_nodes(
    cal: &CalibrationSet,
    view: &GraphView<'_>,
    eval_nodes: &[u32],
) -> CpResult<()> {
    for &v in eval_nodes {
        if !view.is_active(v) {
            return Err(CpError::InactiveNode {
                node: v,
                timestep: view.timestep(),
            });
        }
        if cal.contains(v) {
            return Err(CpError::InvalidParameter {
                name: "eval_nodes",
                reason: format!("node {v} is in the calibration set"),
            });
        }
    }
    Ok(())
}

/// One node's outcome from an engine call.
#[derive(Debug, Clone, PartialEq)]
pub enum NodePrediction {
    Set { labels: Vec<usize>, threshold: f64 },
    NotApplicable,
}

/// Predictions for a batch of nodes plus the score matrix they came from
/// (used for diagnostics such as score-shift tracking).
#[derive(Debug, Clone)]
pub struct PredictionBatch {
    pub per_node: BTreeMap<u32, NodePrediction>,
    pub scores: ScoreMatrix,
}

impl PredictionBatch {
    fn from_threshold(
        view: &GraphView<'_>,
        scores: ScoreMatrix,
        eval_nodes: &[u32],
        threshold: f64,
    ) -> Self {
        let per_node = eval_nodes
            .iter()
            .map(|&v| {
                let row = view.row_of(v).expect("validated active");
                let labels = prediction_set(&scores.row(row), threshold);
                (v, NodePrediction::Set { labels, threshold })
            })
            .collect();
        Self { per_node, scores }
    }
}

/// A threshold frozen at calibration time together with the frozen true-label
/// calibration scores it came from.
#[derive(Debug, Clone)]
pub struct FrozenCalibration {
    pub threshold: f64,
    pub frozen_scores: Vec<f64>,
}

/// Naive calibration: compute calibration scores on the calibration-time view
/// and freeze the uniform-weight threshold forever.
pub fn naive_calibrate<P: ProbSource + ?Sized>(
    cal: &CalibrationSet,
    view_t0: &GraphView<'_>,
    scorer: &Scorer<'_, P>,
    config: &EngineConfig,
) -> CpResult<FrozenCalibration> {
    let scores = scorer.scores(view_t0)?;
    let frozen = cal_true_scores(cal, view_t0, &scores)?;
    let threshold = conformal_threshold(&uniform_samples(&frozen), config.alpha)?;
    Ok(FrozenCalibration {
        threshold,
        frozen_scores: frozen,
    })
}

/// Naive prediction: current-view scores for the evaluated nodes thresholded
/// at the frozen calibration threshold.
pub fn naive_predict<P: ProbSource + ?Sized>(
    frozen: &FrozenCalibration,
    cal: &CalibrationSet,
    view_t: &GraphView<'_>,
    scorer: &Scorer<'_, P>,
    eval_nodes: &[u32],
) -> CpResult<PredictionBatch> {
    validate_eval_nodes(cal, view_t, eval_nodes)?;
    let scores = scorer.scores(view_t)?;
    Ok(PredictionBatch::from_threshold(
        view_t,
        scores,
        eval_nodes,
        frozen.threshold,
    ))
}

/// Node-exchangeable prediction: recompute all scores conditional on the
/// current view, take the uniform-weight threshold over the calibration
/// scores, and threshold each evaluated node's class scores.
pub fn nodeex_predict<P: ProbSource + ?Sized>(
    cal: &CalibrationSet,
    view_t: &GraphView<'_>,
    scorer: &Scorer<'_, P>,
    config: &EngineConfig,
    eval_nodes: &[u32],
) -> CpResult<PredictionBatch> {
    validate_eval_nodes(cal, view_t, eval_nodes)?;
    let scores = scorer.scores(view_t)?;
    let cal_now = cal_true_scores(cal, view_t, &scores)?;
    let threshold = conformal_threshold(&uniform_samples(&cal_now), config.alpha)?;
    Ok(PredictionBatch::from_threshold(
        view_t,
        scores,
        eval_nodes,
        threshold,
    ))
}

/// Edge-exchangeable prediction: like [`nodeex_predict`] but the threshold
/// weights each calibration score by `1 / deg(v | G_t)`, recomputed at every
/// timestep.
pub fn edgeex_predict<P: ProbSource + ?Sized>(
    cal: &CalibrationSet,
    view_t: &GraphView<'_>,
    scorer: &Scorer<'_, P>,
    config: &EngineConfig,
    eval_nodes: &[u32],
) -> CpResult<PredictionBatch> {
    validate_eval_nodes(cal, view_t, eval_nodes)?;
    let scores = scorer.scores(view_t)?;
    let cal_now = cal_true_scores(cal, view_t, &scores)?;
    let mut samples = Vec::with_capacity(cal.len());
    for (&v, &s) in cal.members.iter().zip(&cal_now) {
        let deg = degree_in_view(view_t, v)?;
        if deg == 0 {
            return Err(CpError::ZeroDegreeCalibration {
                node: v,
                timestep: view_t.timestep(),
            });
        }
        samples.push(WeightedSample {
            score: s,
            weight: 1.0 / deg as f64,
        });
    }
    let threshold = conformal_threshold(&samples, config.alpha)?;
    Ok(PredictionBatch::from_threshold(
        view_t,
        scores,
        eval_nodes,
        threshold,
    ))
}

/// Active nodes within `k` hops of `start` in the view (excluding `start`).
fn within_k_hops(view: &GraphView<'_>, start: u32, k: usize) -> Vec<u32> {
    let mut visited = std::collections::HashSet::new();
    visited.insert(start);
    let mut frontier = vec![start];
    let mut reach = Vec::new();
    for _ in 0..k {
        let mut next = Vec::new();
        for &v in &frontier {
            for &nb in view.neighbors(v) {
                if visited.insert(nb) {
                    next.push(nb);
                    reach.push(nb);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    reach
}

/// Neighborhood-restricted prediction: each test node calibrates only on
/// calibration members within `naps_k` hops of it in the current view; nodes
/// with no such member get [`NodePrediction::NotApplicable`].
pub fn naps_predict<P: ProbSource + ?Sized>(
    cal: &CalibrationSet,
    view_t: &GraphView<'_>,
    scorer: &Scorer<'_, P>,
    config: &EngineConfig,
    eval_nodes: &[u32],
) -> CpResult<PredictionBatch> {
    validate_eval_nodes(cal, view_t, eval_nodes)?;
    let scores = scorer.scores(view_t)?;
    let cal_now = cal_true_scores(cal, view_t, &scores)?;
    let mut member_index = std::collections::HashMap::new();
    for (i, &v) in cal.members.iter().enumerate() {
        member_index.insert(v, i);
    }
    let mut per_node = BTreeMap::new();
    for &v in eval_nodes {
        let reachable = within_k_hops(view_t, v, config.naps_k);
        let local: Vec<f64> = reachable
            .iter()
            .filter_map(|nb| member_index.get(nb).map(|&i| cal_now[i]))
            .collect();
        if local.is_empty() {
            per_node.insert(v, NodePrediction::NotApplicable);
            continue;
        }
        let threshold = conformal_threshold(&uniform_samples(&local), config.alpha)?;
        let row = view_t.row_of(v).expect("validated active");
        let labels = prediction_set(&scores.row(row), threshold);
        per_node.insert(v, NodePrediction::Set { labels, threshold });
    }
    Ok(PredictionBatch { per_node, scores })
}

/// The `K` per-subgraph prediction sets (with their thresholds) for one test
/// node in the transductive setting: each subgraph holds the test node, the
/// whole calibration set, and a random fraction of the remaining nodes.
pub fn subgraph_vote_sets<P: ProbSource + ?Sized>(
    cal: &CalibrationSet,
    base: &Graph,
    scorer: &Scorer<'_, P>,
    config: &EngineConfig,
    test_node: u32,
) -> CpResult<Vec<(Vec<usize>, f64)>> {
    if cal.contains(test_node) {
        return Err(CpError::InvalidParameter {
            name: "test_node",
            reason: format!("node {test_node} is in the calibration set"),
        });
    }
    if config.vote_k == 0 {
        return Err(CpError::InvalidParameter {
            name: "vote_k",
            reason: "must be at least 1".into(),
        });
    }
    if !(config.vote_subgraph_fraction > 0.0 && config.vote_subgraph_fraction <= 1.0) {
        return Err(CpError::InvalidParameter {
            name: "vote_subgraph_fraction",
            reason: format!("must lie in (0, 1], got {}", config.vote_subgraph_fraction),
        });
    }
    let mut in_core = vec![false; base.num_nodes()];
    in_core[test_node as usize] = true;
    for &v in cal.members() {
        in_core[v as usize] = true;
    }
    let rest: Vec<u32> = (0..base.num_nodes() as u32)
        .filter(|&v| !in_core[v as usize])
        .collect();
    let keep = (config.vote_subgraph_fraction * rest.len() as f64).floor() as usize;

    let mut out = Vec::with_capacity(config.vote_k);
    for rep in 0..config.vote_k {
        let mut rng =
            crate::rng::substream(config.seed, &[0x5B, test_node as u64, rep as u64]);
        let mut pool = rest.clone();
        rand::seq::SliceRandom::shuffle(&mut pool[..], &mut rng);
        let mut nodes = Vec::with_capacity(1 + cal.len() + keep);
        nodes.push(test_node);
        nodes.extend_from_slice(cal.members());
        nodes.extend_from_slice(&pool[..keep]);
        let view = GraphView::induced(base, &nodes, 0)?;
        let scores = scorer.scores_salted(&view, rep as u64 + 1)?;
        let cal_now = cal_true_scores(cal, &view, &scores)?;
        let threshold = conformal_threshold(&uniform_samples(&cal_now), config.alpha)?;
        let row = view.row_of(test_node).expect("test node in subgraph");
        out.push((prediction_set(&scores.row(row), threshold), threshold));
    }
    Ok(out)
}

/// Combine per-subgraph sets by randomized voting: label `y` enters with
/// probability `votes(y) / K`, one seeded Bernoulli draw per label.
pub fn vote_bernoulli(
    sets: &[(Vec<usize>, f64)],
    num_classes: usize,
    seed: u64,
    test_node: u32,
) -> Vec<usize> {
    let k = sets.len() as f64;
    (0..num_classes)
        .filter(|y| {
            let votes = sets.iter().filter(|(s, _)| s.contains(y)).count() as f64;
            let p = votes / k;
            crate::rng::keyed_uniform(seed, &[0xB0, test_node as u64, *y as u64]) < p
        })
        .collect()
}

/// Union of per-subgraph sets (over-covers).
pub fn vote_union(sets: &[(Vec<usize>, f64)], num_classes: usize) -> Vec<usize> {
    (0..num_classes)
        .filter(|y| sets.iter().any(|(s, _)| s.contains(y)))
        .collect()
}

/// Intersection of per-subgraph sets (under-covers).
pub fn vote_intersection(sets: &[(Vec<usize>, f64)], num_classes: usize) -> Vec<usize> {
    (0..num_classes)
        .filter(|y| sets.iter().all(|(s, _)| s.contains(y)))
        .collect()
}

/// Mean-score variant: average the test node's class scores and the
/// calibration scores across the `K` subgraphs, then run one conditional CP.
fn subgraph_mean_score_set<P: ProbSource + ?Sized>(
    cal: &CalibrationSet,
    base: &Graph,
    scorer: &Scorer<'_, P>,
    config: &EngineConfig,
    test_node: u32,
) -> CpResult<Vec<usize>> {
    let mut in_core = vec![false; base.num_nodes()];
    in_core[test_node as usize] = true;
    for &v in cal.members() {
        in_core[v as usize] = true;
    }
    let rest: Vec<u32> = (0..base.num_nodes() as u32)
        .filter(|&v| !in_core[v as usize])
        .collect();
    let keep = (config.vote_subgraph_fraction * rest.len() as f64).floor() as usize;
    let k_classes = base.num_classes();
    let mut mean_test = vec![0.0; k_classes];
    let mut mean_cal = vec![0.0; cal.len()];
    for rep in 0..config.vote_k {
        let mut rng =
            crate::rng::substream(config.seed, &[0x5B, test_node as u64, rep as u64]);
        let mut pool = rest.clone();
        rand::seq::SliceRandom::shuffle(&mut pool[..], &mut rng);
        let mut nodes = Vec::with_capacity(1 + cal.len() + keep);
        nodes.push(test_node);
        nodes.extend_from_slice(cal.members());
        nodes.extend_from_slice(&pool[..keep]);
        let view = GraphView::induced(base, &nodes, 0)?;
        let scores = scorer.scores_salted(&view, rep as u64 + 1)?;
        let cal_now = cal_true_scores(cal, &view, &scores)?;
        for (m, s) in mean_cal.iter_mut().zip(&cal_now) {
            *m += s / config.vote_k as f64;
        }
        let row = view.row_of(test_node).expect("test node in subgraph");
        for (c, m) in mean_test.iter_mut().enumerate() {
            *m += scores.values()[[row, c]] / config.vote_k as f64;
        }
    }
    let threshold = conformal_threshold(&uniform_samples(&mean_cal), config.alpha)?;
    Ok(prediction_set(&mean_test, threshold))
}

/// Subgraph-voting prediction set for one test node on the full graph.
pub fn subgraph_vote_predict<P: ProbSource + ?Sized>(
    cal: &CalibrationSet,
    base: &Graph,
    scorer: &Scorer<'_, P>,
    config: &EngineConfig,
    test_node: u32,
) -> CpResult<Vec<usize>> {
    match config.vote_combine {
        VoteCombine::Bernoulli => {
            let sets = subgraph_vote_sets(cal, base, scorer, config, test_node)?;
            Ok(vote_bernoulli(
                &sets,
                base.num_classes(),
                config.seed,
                test_node,
            ))
        }
        VoteCombine::MeanScore => {
            subgraph_mean_score_set(cal, base, scorer, config, test_node)
        }
    }
}

/// When prediction sets are produced for each test node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EvalPolicy {
    /// Each node evaluated at its arrival timestep.
    UponArrival,
    /// Every node that has arrived by `t` is evaluated at `t`.
    FixedTime { t: usize },
    /// Each node evaluated once at a uniformly random timestep between its
    /// arrival and the end of the sequence, fixed before any prediction.
    RandomTime { policy_seed: u64 },
}

/// Everything one engine run over one schedule produces.
#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub records: Vec<PredictionSetRecord>,
    pub timeline: Vec<TimestepAggregate>,
    /// (node, timestep) pairs NAPS left without a prediction set.
    pub inapplicable: Vec<(u32, usize)>,
}

impl SequenceOutcome {
    /// Fraction of evaluation attempts that produced no set.
    pub fn inapplicable_fraction(&self) -> f64 {
        let total = self.records.len() + self.inapplicable.len();
        if total == 0 {
            0.0
        } else {
            self.inapplicable.len() as f64 / total as f64
        }
    }
}

/// Build the evaluation mask a policy induces on a schedule.
fn build_mask(schedule: &ArrivalSchedule, policy: &EvalPolicy) -> CpResult<EvaluationMask> {
    let arrivals = schedule.test_arrivals();
    let assignments: Vec<(u32, usize)> = match policy {
        EvalPolicy::UponArrival => arrivals,
        EvalPolicy::FixedTime { t } => {
            if *t > schedule.len() {
                return Err(CpError::TimestepOutOfRange {
                    t: *t,
                    len: schedule.len(),
                });
            }
            arrivals
                .into_iter()
                .filter(|&(_, a)| a <= *t)
                .map(|(v, _)| (v, *t))
                .collect()
        }
        EvalPolicy::RandomTime { policy_seed } => arrivals
            .into_iter()
            .map(|(v, a)| {
                let mut rng = crate::rng::substream(*policy_seed, &[0xEA, v as u64]);
                (v, rand::Rng::gen_range(&mut rng, a..=schedule.len()))
            })
            .collect(),
    };
    EvaluationMask::new(assignments, schedule.activation_times())
}

/// Drive one engine over one schedule under one evaluation policy.
///
/// Advances through the mask's due timesteps, runs the configured engine for
/// the due nodes, and emits one record per evaluated node plus a per-timestep
/// aggregate row (running metrics and the score-shift EMD diagnostics
/// relative to the frozen calibration scores).
pub fn evaluate_sequence<P: ProbSource + ?Sized>(
    base: &Graph,
    schedule: &ArrivalSchedule,
    source: &P,
    config: &EngineConfig,
    policy: &EvalPolicy,
) -> CpResult<SequenceOutcome> {
    let scorer = Scorer::new(source, config.score, config.seed);
    let cal = CalibrationSet::from_schedule(schedule, base)?;
    let mask = build_mask(schedule, policy)?;
    let view_t0 = view_at(schedule, base, schedule.t0_cal())?;
    let frozen = naive_calibrate(&cal, &view_t0, &scorer, config)?;

    let arrivals = schedule.test_arrivals();
    let arrival_of: std::collections::HashMap<u32, usize> = arrivals.iter().copied().collect();

    let mut records = Vec::with_capacity(mask.len());
    let mut timeline = Vec::new();
    let mut inapplicable = Vec::new();
    let engine_name = config.engine.name();

    for t in mask.due_timesteps() {
        let due = mask.due_at(t);
        let view_t = view_at(schedule, base, t)?;
        let batch = match config.engine {
            EngineKind::Naive => naive_predict(&frozen, &cal, &view_t, &scorer, &due)?,
            EngineKind::NodeEx => nodeex_predict(&cal, &view_t, &scorer, config, &due)?,
            EngineKind::EdgeEx => edgeex_predict(&cal, &view_t, &scorer, config, &due)?,
            EngineKind::Naps => naps_predict(&cal, &view_t, &scorer, config, &due)?,
            EngineKind::SubgraphVote => {
                let scores = scorer.scores(&view_t)?;
                let mut per_node = BTreeMap::new();
                for &v in &due {
                    let labels = subgraph_vote_predict(&cal, base, &scorer, config, v)?;
                    per_node.insert(
                        v,
                        NodePrediction::Set {
                            labels,
                            threshold: f64::NAN,
                        },
                    );
                }
                PredictionBatch { per_node, scores }
            }
        };

        for &v in &due {
            let arrival_t = arrival_of[&v];
            match &batch.per_node[&v] {
                NodePrediction::Set { labels, threshold } => {
                    records.push(PredictionSetRecord::new(
                        v,
                        arrival_t,
                        t,
                        labels.clone(),
                        base.label(v),
                        *threshold,
                        engine_name,
                        config.seed,
                    ));
                }
                NodePrediction::NotApplicable => inapplicable.push((v, t)),
            }
        }

        // score-shift diagnostics against the frozen calibration scores
        let cal_now = cal_true_scores(&cal, &view_t, &batch.scores)?;
        let emd_cal = crate::eval::emd_1d(&frozen.frozen_scores, &cal_now)?;
        let test_now: Vec<f64> = arrivals
            .iter()
            .filter(|&&(_, a)| a <= t)
            .filter_map(|&(v, _)| {
                view_t
                    .row_of(v)
                    .map(|row| batch.scores.values()[[row, base.label(v) as usize]])
            })
            .collect();
        let emd_test = if test_now.is_empty() {
            0.0
        } else {
            crate::eval::emd_1d(&frozen.frozen_scores, &test_now)?
        };
        let evaluated = &records;
        let (coverage, avg_size, singleton) = if evaluated.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (
                crate::eval::empirical_coverage(evaluated)?,
                crate::eval::avg_set_size(evaluated)?,
                crate::eval::singleton_hit_ratio(evaluated)?,
            )
        };
        timeline.push(TimestepAggregate {
            seed: config.seed,
            engine: engine_name,
            t,
            coverage,
            avg_size,
            singleton_hit: singleton,
            emd_cal,
            emd_test,
        });
    }

    Ok(SequenceOutcome {
        records,
        timeline,
        inapplicable,
    })
}

/// Full coverage-matrix bookkeeping: evaluate every active test node at every
/// timestep after calibration (diagnostic, not mask-constrained). Supported
/// for the threshold engines; the voting engine has no per-timestep sets.
pub fn full_coverage_matrix<P: ProbSource + ?Sized>(
    base: &Graph,
    schedule: &ArrivalSchedule,
    source: &P,
    config: &EngineConfig,
) -> CpResult<crate::eval::CoverageMatrix> {
    if matches!(config.engine, EngineKind::SubgraphVote | EngineKind::Naps) {
        return Err(CpError::InvalidParameter {
            name: "engine",
            reason: "full coverage matrix requires a total threshold engine".into(),
        });
    }
    let scorer = Scorer::new(source, config.score, config.seed);
    let cal = CalibrationSet::from_schedule(schedule, base)?;
    let view_t0 = view_at(schedule, base, schedule.t0_cal())?;
    let frozen = naive_calibrate(&cal, &view_t0, &scorer, config)?;
    let arrivals = schedule.test_arrivals();
    let nodes: Vec<u32> = arrivals.iter().map(|&(v, _)| v).collect();
    let times: Vec<usize> = arrivals.iter().map(|&(_, t)| t).collect();
    let mut matrix = crate::eval::CoverageMatrix::new(nodes, times, schedule.len())?;
    for t in (schedule.t0_cal() + 1)..=schedule.len() {
        let view_t = view_at(schedule, base, t)?;
        let due: Vec<u32> = arrivals
            .iter()
            .filter(|&&(_, a)| a <= t)
            .map(|&(v, _)| v)
            .collect();
        if due.is_empty() {
            continue;
        }
        let batch = match config.engine {
            EngineKind::Naive => naive_predict(&frozen, &cal, &view_t, &scorer, &due)?,
            EngineKind::NodeEx => nodeex_predict(&cal, &view_t, &scorer, config, &due)?,
            EngineKind::EdgeEx => edgeex_predict(&cal, &view_t, &scorer, config, &due)?,
            _ => unreachable!("guarded above"),
        };
        for &v in &due {
            if let NodePrediction::Set { labels, .. } = &batch.per_node[&v] {
                matrix.set(v, t, labels.contains(&(base.label(v) as usize)))?;
            }
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::sbm_homophilous;
    use crate::model::{train, TrainConfig};
    use crate::scores::ProbMatrix;
    use crate::sequence::{edge_sequence, node_sequence};
    use ndarray::Array2;

    /// Probability source with fixed per-base-node rows; gathers rows by the
    /// view's active ordering (the same shape external score files use).
    struct FixedProbs {
        rows: Vec<Vec<f64>>,
    }

    impl ProbSource for FixedProbs {
        fn probabilities(&self, view: &GraphView<'_>) -> CpResult<ProbMatrix> {
            let k = self.rows[0].len();
            let mut m = Array2::zeros((view.num_active(), k));
            for (r, &v) in view.active_nodes().iter().enumerate() {
                for c in 0..k {
                    m[[r, c]] = self.rows[v as usize][c];
                }
            }
            ProbMatrix::new(m)
        }
    }

    /// n nodes, no edges; prob of class 0 descending by node id.
    fn fixture(n: usize) -> (Graph, FixedProbs) {
        let labels = vec![0u32; n];
        let g = Graph::new(n, vec![], Array2::zeros((n, 1)), labels).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let p = (i + 1) as f64 / (n + 1) as f64;
                vec![p, 1.0 - p]
            })
            .collect();
        (g, FixedProbs { rows })
    }

    fn tps_config(engine: EngineKind, alpha: f64) -> EngineConfig {
        EngineConfig::new(engine, alpha, ScoreKind::Tps, 7).unwrap()
    }

    #[test]
    fn naive_threshold_is_first_order_statistic() {
        // 9 calibration nodes with distinct class-0 scores, alpha = 0.1:
        // floor(10 * 0.1) = 1 -> the smallest calibration score
        let (g, probs) = fixture(10);
        let cal = CalibrationSet::new((0..9).collect(), vec![0; 9]).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let view = GraphView::full(&g);
        let config = tps_config(EngineKind::Naive, 0.1);
        let frozen = naive_calibrate(&cal, &view, &scorer, &config).unwrap();
        assert_eq!(frozen.threshold, 1.0 / 11.0);
        assert_eq!(frozen.frozen_scores.len(), 9);
    }

    #[test]
    fn naive_output_constant_when_scores_do_not_change() {
        let (g, probs) = fixture(8);
        let mut rng = crate::rng::substream(5, &[1]);
        let schedule = node_sequence(&g, &[0, 1], 3, &mut rng).unwrap();
        let cal = CalibrationSet::from_schedule(&schedule, &g).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let config = tps_config(EngineKind::Naive, 0.2);
        let t0 = schedule.t0_cal();
        let v0 = view_at(&schedule, &g, t0).unwrap();
        let frozen = naive_calibrate(&cal, &v0, &scorer, &config).unwrap();
        let test = schedule.test_arrivals()[0].0;
        let t_arrival = schedule.activation_time(test).unwrap();
        let mut sets = Vec::new();
        for t in t_arrival..=schedule.len() {
            let v = view_at(&schedule, &g, t).unwrap();
            let batch = naive_predict(&frozen, &cal, &v, &scorer, &[test]).unwrap();
            match &batch.per_node[&test] {
                NodePrediction::Set { labels, .. } => sets.push(labels.clone()),
                _ => unreachable!(),
            }
        }
        assert!(sets.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn nodeex_equals_naive_at_calibration_time() {
        let (g, probs) = fixture(12);
        let mut rng = crate::rng::substream(6, &[1]);
        let schedule = node_sequence(&g, &[0], 5, &mut rng).unwrap();
        let cal = CalibrationSet::from_schedule(&schedule, &g).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let config = tps_config(EngineKind::NodeEx, 0.2);
        let t0 = schedule.t0_cal();
        let v0 = view_at(&schedule, &g, t0).unwrap();
        let frozen = naive_calibrate(&cal, &v0, &scorer, &config).unwrap();
        // evaluate a calibration-time-active non-cal node at t0: none exist
        // beyond the pinned node, so compare thresholds directly
        let scores = scorer.scores(&v0).unwrap();
        let cal_now = cal_true_scores(&cal, &v0, &scores).unwrap();
        let tau = conformal_threshold(&uniform_samples(&cal_now), config.alpha).unwrap();
        assert_eq!(tau, frozen.threshold);
    }

    #[test]
    fn nodeex_emits_full_set_when_all_scores_clear_calibration() {
        // every class score of the test node exceeds the max calibration
        // score, so the set must be the full label set
        let g = Graph::new(6, vec![], Array2::zeros((6, 1)), vec![0; 6]).unwrap();
        let mut rows = vec![vec![0.02, 0.98]; 5]; // cal true-label scores 0.02
        rows.push(vec![0.5, 0.5]);
        let probs = FixedProbs { rows };
        let cal = CalibrationSet::new(vec![0, 1, 2, 3, 4], vec![0; 5]).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let view = GraphView::full(&g);
        let config = tps_config(EngineKind::NodeEx, 0.3);
        let batch = nodeex_predict(&cal, &view, &scorer, &config, &[5]).unwrap();
        match &batch.per_node[&5] {
            NodePrediction::Set { labels, threshold } => {
                assert_eq!(labels, &vec![0, 1]);
                // scan oracle: recompute the set from the raw scores
                let row = view.row_of(5).unwrap();
                let scanned: Vec<usize> = batch
                    .scores
                    .row(row)
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s >= *threshold)
                    .map(|(i, _)| i)
                    .collect();
                assert_eq!(&scanned, labels);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn edgeex_weights_use_inverse_degree() {
        // path 0-1-2: node 1 has degree 2 (weight 0.5), ends degree 1
        let g = Graph::new(
            3,
            vec![(0, 1), (1, 2)],
            Array2::zeros((3, 1)),
            vec![0, 0, 0],
        )
        .unwrap();
        let rows = vec![vec![0.2, 0.8], vec![0.5, 0.5], vec![0.9, 0.1]];
        let probs = FixedProbs { rows };
        let cal = CalibrationSet::new(vec![0, 1], vec![0, 0]).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let view = GraphView::full(&g);
        // weights: node0 -> 1, node1 -> 0.5; total 1.5, denom 2.5
        // fractions ascending by score: s=0.2 (w=1) -> 0.4; s=0.5 -> 0.6
        // alpha=0.45: last fraction <= 0.45 is 0.4 -> threshold 0.2
        let config = tps_config(EngineKind::EdgeEx, 0.45);
        let batch = edgeex_predict(&cal, &view, &scorer, &config, &[2]).unwrap();
        match &batch.per_node[&2] {
            NodePrediction::Set { threshold, .. } => assert_eq!(*threshold, 0.2),
            _ => unreachable!(),
        }
    }

    #[test]
    fn edgeex_rejects_zero_degree_calibration_nodes() {
        let g = Graph::new(3, vec![(1, 2)], Array2::zeros((3, 1)), vec![0; 3]).unwrap();
        let probs = FixedProbs {
            rows: vec![vec![0.5, 0.5]; 3],
        };
        let cal = CalibrationSet::new(vec![0], vec![0]).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let view = GraphView::full(&g);
        let config = tps_config(EngineKind::EdgeEx, 0.2);
        let err = edgeex_predict(&cal, &view, &scorer, &config, &[1]).unwrap_err();
        assert!(matches!(err, CpError::ZeroDegreeCalibration { .. }));
    }

    #[test]
    fn edgeex_equals_nodeex_when_degrees_are_equal() {
        // disjoint edges: every node has degree 1
        let g = Graph::new(
            8,
            vec![(0, 1), (2, 3), (4, 5), (6, 7)],
            Array2::zeros((8, 1)),
            vec![0; 8],
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let p = 0.1 + 0.1 * i as f64;
                vec![p, 1.0 - p]
            })
            .collect();
        let probs = FixedProbs { rows };
        let cal = CalibrationSet::new(vec![0, 1, 2, 3, 4], vec![0; 5]).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let view = GraphView::full(&g);
        for alpha in [0.1, 0.3, 0.5] {
            let ne = nodeex_predict(
                &cal,
                &view,
                &scorer,
                &tps_config(EngineKind::NodeEx, alpha),
                &[6, 7],
            )
            .unwrap();
            let ee = edgeex_predict(
                &cal,
                &view,
                &scorer,
                &tps_config(EngineKind::EdgeEx, alpha),
                &[6, 7],
            )
            .unwrap();
            assert_eq!(ne.per_node, ee.per_node, "alpha {alpha}");
        }
    }

    #[test]
    fn naps_disconnected_node_is_not_applicable() {
        let g = Graph::new(4, vec![(0, 1)], Array2::zeros((4, 1)), vec![0; 4]).unwrap();
        let probs = FixedProbs {
            rows: vec![vec![0.6, 0.4]; 4],
        };
        let cal = CalibrationSet::new(vec![0, 1], vec![0, 0]).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let view = GraphView::full(&g);
        let config = tps_config(EngineKind::Naps, 0.3).with_naps_k(2);
        let batch = naps_predict(&cal, &view, &scorer, &config, &[2, 3]).unwrap();
        assert_eq!(batch.per_node[&2], NodePrediction::NotApplicable);
        assert_eq!(batch.per_node[&3], NodePrediction::NotApplicable);
    }

    #[test]
    fn naps_with_full_reach_equals_nodeex() {
        // star: test node adjacent to all calibration nodes
        let edges: Vec<(u32, u32)> = (1..6).map(|i| (0u32, i as u32)).collect();
        let g = Graph::new(6, edges, Array2::zeros((6, 1)), vec![0; 6]).unwrap();
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let p = 0.15 + 0.1 * i as f64;
                vec![p, 1.0 - p]
            })
            .collect();
        let probs = FixedProbs { rows };
        let cal = CalibrationSet::new(vec![1, 2, 3, 4, 5], vec![0; 5]).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, 7);
        let view = GraphView::full(&g);
        let naps = naps_predict(
            &cal,
            &view,
            &scorer,
            &tps_config(EngineKind::Naps, 0.3).with_naps_k(1),
            &[0],
        )
        .unwrap();
        let nodeex = nodeex_predict(
            &cal,
            &view,
            &scorer,
            &tps_config(EngineKind::NodeEx, 0.3),
            &[0],
        )
        .unwrap();
        assert_eq!(naps.per_node[&0], nodeex.per_node[&0]);
    }

    #[test]
    fn vote_single_subgraph_reduces_to_conditional_cp() {
        let mut rng = crate::rng::substream(40, &[2]);
        let g = sbm_homophilous(40, 2, 0.3, 0.05, 2, 2.0, &mut rng).unwrap();
        let cal_members: Vec<u32> = (0..10).collect();
        let labels = cal_members.iter().map(|&v| g.label(v)).collect();
        let cal = CalibrationSet::new(cal_members, labels).unwrap();
        let trained = train(&GraphView::full(&g), &(0..20u32).collect::<Vec<_>>(), &TrainConfig::default())
            .unwrap()
            .classifier;
        let scorer = Scorer::new(&trained, ScoreKind::Aps, 7);
        let config = EngineConfig::new(EngineKind::SubgraphVote, 0.2, ScoreKind::Aps, 7)
            .unwrap()
            .with_votes(1, 0.5, VoteCombine::Bernoulli);
        let sets = subgraph_vote_sets(&cal, &g, &scorer, &config, 25).unwrap();
        assert_eq!(sets.len(), 1);
        // with K = 1, every vote probability is 0 or 1
        let combined = vote_bernoulli(&sets, g.num_classes(), 7, 25);
        assert_eq!(combined, sets[0].0);
    }

    #[test]
    fn vote_unanimous_labels_always_included() {
        let sets = vec![
            (vec![0, 1], 0.1),
            (vec![0], 0.2),
            (vec![0, 2], 0.15),
        ];
        for seed in 0..20 {
            let combined = vote_bernoulli(&sets, 3, seed, 9);
            assert!(combined.contains(&0), "unanimous label dropped");
        }
        assert_eq!(vote_union(&sets, 3), vec![0, 1, 2]);
        assert_eq!(vote_intersection(&sets, 3), vec![0]);
    }

    #[test]
    fn upon_arrival_emits_one_record_per_test_node() {
        let (g, probs) = fixture(8);
        let mut rng = crate::rng::substream(41, &[3]);
        let schedule = node_sequence(&g, &[0, 1], 3, &mut rng).unwrap();
        let config = tps_config(EngineKind::NodeEx, 0.2);
        let outcome =
            evaluate_sequence(&g, &schedule, &probs, &config, &EvalPolicy::UponArrival).unwrap();
        assert_eq!(outcome.records.len(), 3);
        let ts: Vec<usize> = outcome.records.iter().map(|r| r.eval_t).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]), "timesteps {ts:?}");
        for r in &outcome.records {
            assert_eq!(r.arrival_t, r.eval_t);
        }
    }

    #[test]
    fn fixed_final_time_equals_transductive_run() {
        let (g, probs) = fixture(9);
        let mut rng = crate::rng::substream(42, &[3]);
        let schedule = node_sequence(&g, &[0], 4, &mut rng).unwrap();
        let config = tps_config(EngineKind::NodeEx, 0.25);
        let t_end = schedule.len();
        let outcome = evaluate_sequence(
            &g,
            &schedule,
            &probs,
            &config,
            &EvalPolicy::FixedTime { t: t_end },
        )
        .unwrap();
        assert!(outcome.records.iter().all(|r| r.eval_t == t_end));

        // transductive oracle: one batch on the full view
        let cal = CalibrationSet::from_schedule(&schedule, &g).unwrap();
        let scorer = Scorer::new(&probs, ScoreKind::Tps, config.seed);
        let full = view_at(&schedule, &g, t_end).unwrap();
        let eval_nodes: Vec<u32> = schedule.test_arrivals().iter().map(|&(v, _)| v).collect();
        let batch = nodeex_predict(&cal, &full, &scorer, &config, &eval_nodes).unwrap();
        for r in &outcome.records {
            match &batch.per_node[&r.node] {
                NodePrediction::Set { labels, .. } => assert_eq!(labels, &r.label_set),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn emitted_sets_are_recomputable_from_recorded_threshold() {
        let mut rng = crate::rng::substream(43, &[3]);
        let g = sbm_homophilous(60, 3, 0.2, 0.02, 3, 1.5, &mut rng).unwrap();
        let pinned: Vec<u32> = (0..12).collect();
        let schedule = node_sequence(&g, &pinned, 10, &mut rng).unwrap();
        let trained = train(
            &view_at(&schedule, &g, 0).unwrap(),
            &pinned,
            &TrainConfig {
                epochs: 50,
                ..TrainConfig::default()
            },
        )
        .unwrap()
        .classifier;
        let config = EngineConfig::new(EngineKind::NodeEx, 0.15, ScoreKind::Aps, 11).unwrap();
        let outcome =
            evaluate_sequence(&g, &schedule, &trained, &config, &EvalPolicy::UponArrival).unwrap();
        let scorer = Scorer::new(&trained, ScoreKind::Aps, config.seed);
        for r in &outcome.records {
            let view = view_at(&schedule, &g, r.eval_t).unwrap();
            let scores = scorer.scores(&view).unwrap();
            let row = view.row_of(r.node).unwrap();
            let recomputed = prediction_set(&scores.row(row), r.q_used);
            assert_eq!(recomputed, r.label_set, "node {} at t {}", r.node, r.eval_t);
        }
    }

    #[test]
    fn random_time_policy_is_within_bounds_and_deterministic() {
        let (g, probs) = fixture(10);
        let mut rng = crate::rng::substream(44, &[3]);
        let schedule = node_sequence(&g, &[0], 4, &mut rng).unwrap();
        let config = tps_config(EngineKind::NodeEx, 0.25);
        let policy = EvalPolicy::RandomTime { policy_seed: 5 };
        let a = evaluate_sequence(&g, &schedule, &probs, &config, &policy).unwrap();
        let b = evaluate_sequence(&g, &schedule, &probs, &config, &policy).unwrap();
        assert_eq!(a.records, b.records);
        for r in &a.records {
            assert!(r.eval_t >= r.arrival_t && r.eval_t <= schedule.len());
        }
    }

    #[test]
    fn naps_sequence_counts_inapplicable_nodes() {
        let g = Graph::new(
            6,
            vec![(0, 1), (2, 3)],
            Array2::zeros((6, 1)),
            vec![0; 6],
        )
        .unwrap();
        let probs = FixedProbs {
            rows: vec![vec![0.7, 0.3]; 6],
        };
        let mut rng = crate::rng::substream(45, &[3]);
        let schedule = node_sequence(&g, &[0], 2, &mut rng).unwrap();
        let config = tps_config(EngineKind::Naps, 0.3).with_naps_k(1);
        let outcome = evaluate_sequence(
            &g,
            &schedule,
            &probs,
            &config,
            &EvalPolicy::FixedTime { t: schedule.len() },
        )
        .unwrap();
        assert_eq!(outcome.records.len() + outcome.inapplicable.len(), 3);
        assert!(outcome.inapplicable_fraction() > 0.0);
    }

    #[test]
    fn edge_sequence_evaluation_runs_edgeex() {
        let mut rng = crate::rng::substream(46, &[3]);
        let g = sbm_homophilous(50, 2, 0.25, 0.05, 2, 1.5, &mut rng).unwrap();
        let schedule = edge_sequence(&g, &[], 8, &mut rng).unwrap();
        let probs = FixedProbs {
            rows: (0..50)
                .map(|i| {
                    let p = 0.3 + 0.4 * ((i % 7) as f64 / 7.0);
                    vec![p, 1.0 - p]
                })
                .collect(),
        };
        let config = tps_config(EngineKind::EdgeEx, 0.2);
        let outcome =
            evaluate_sequence(&g, &schedule, &probs, &config, &EvalPolicy::UponArrival).unwrap();
        assert!(!outcome.records.is_empty());
        // every record's node activated at its eval time
        for r in &outcome.records {
            assert_eq!(schedule.activation_time(r.node), Some(r.eval_t));
        }
    }

    #[test]
    fn full_matrix_tracks_presence_invariant() {
        let (g, probs) = fixture(9);
        let mut rng = crate::rng::substream(47, &[3]);
        let schedule = node_sequence(&g, &[0], 3, &mut rng).unwrap();
        let config = tps_config(EngineKind::NodeEx, 0.25);
        let matrix = full_coverage_matrix(&g, &schedule, &probs, &config).unwrap();
        for &v in matrix.nodes() {
            let arrival = schedule.activation_time(v).unwrap();
            for t in 0..=schedule.len() {
                let e = matrix.entry(v, t).unwrap();
                if t < arrival {
                    assert_eq!(e, crate::eval::CoverageEntry::NotPresent);
                } else {
                    assert_ne!(e, crate::eval::CoverageEntry::NotPresent);
                }
            }
        }
    }
}
