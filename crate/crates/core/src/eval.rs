//! Coverage bookkeeping, empirical metrics, and law comparison.

use crate::error::{CpError, CpResult};

/// One prediction-set emission for a (node, timestep) pair.
///
/// `covered` and `set_size` are derived from the label set at construction,
/// so the record stays internally consistent; the emitted set is always
/// recomputable as `{ y : s(v, y) >= q_used }` from the engine's recorded
/// threshold (voting engines, which have no single threshold, record NaN).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSetRecord {
    pub node: u32,
    pub arrival_t: usize,
    pub eval_t: usize,
    pub label_set: Vec<usize>,
    pub true_label: u32,
    pub covered: bool,
    pub set_size: usize,
    pub q_used: f64,
    pub engine: &'static str,
    pub seed: u64,
}

impl PredictionSetRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        node: u32,
        arrival_t: usize,
        eval_t: usize,
        label_set: Vec<usize>,
        true_label: u32,
        q_used: f64,
        engine: &'static str,
        seed: u64,
    ) -> Self {
        let covered = label_set.contains(&(true_label as usize));
        let set_size = label_set.len();
        Self {
            node,
            arrival_t,
            eval_t,
            label_set,
            true_label,
            covered,
            set_size,
            q_used,
            engine,
            seed,
        }
    }
}

/// An assignment of nodes to evaluation timesteps: each node at most once,
/// never before its arrival.
#[derive(Debug, Clone, Default)]
pub struct EvaluationMask {
    assignments: Vec<(u32, usize)>,
}

impl EvaluationMask {
    pub fn new(mut assignments: Vec<(u32, usize)>, arrival: &[Option<usize>]) -> CpResult<Self> {
        assignments.sort_by_key(|&(v, t)| (t, v));
        let mut seen = std::collections::HashSet::new();
        for &(v, t) in &assignments {
            if !seen.insert(v) {
                return Err(CpError::InvalidParameter {
                    name: "mask",
                    reason: format!("node {v} assigned twice"),
                });
            }
            match arrival.get(v as usize).copied().flatten() {
                Some(a) if a <= t => {}
                _ => {
                    return Err(CpError::InvalidParameter {
                        name: "mask",
                        reason: format!("node {v} evaluated at {t} before arrival"),
                    })
                }
            }
        }
        Ok(Self { assignments })
    }

    /// Assignments sorted by (timestep, node).
    pub fn assignments(&self) -> &[(u32, usize)] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Nodes due at one timestep.
    pub fn due_at(&self, t: usize) -> Vec<u32> {
        self.assignments
            .iter()
            .filter(|&&(_, at)| at == t)
            .map(|&(v, _)| v)
            .collect()
    }

    /// The distinct timesteps with at least one due node, ascending.
    pub fn due_timesteps(&self) -> Vec<usize> {
        let mut ts: Vec<usize> = self.assignments.iter().map(|&(_, t)| t).collect();
        ts.dedup();
        ts
    }
}

/// Per-cell coverage state in the node-by-timestep matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageEntry {
    Covered,
    Miscovered,
    NotPresent,
}

/// Node-by-timestep coverage bookkeeping.
///
/// Rows are test nodes in arrival order; a cell is `NotPresent` exactly while
/// its node has not arrived. Built by full-grid evaluation (every active test
/// node at every timestep), which is what makes each active cell carry a
/// covered/miscovered verdict.
#[derive(Debug, Clone)]
pub struct CoverageMatrix {
    nodes: Vec<u32>,
    arrival: Vec<usize>,
    num_timesteps: usize,
    entries: Vec<CoverageEntry>,
}

impl CoverageMatrix {
    /// Create a matrix for `nodes` with their arrival timesteps, over
    /// timesteps `0..=num_timesteps`.
    pub fn new(nodes: Vec<u32>, arrival: Vec<usize>, num_timesteps: usize) -> CpResult<Self> {
        if nodes.len() != arrival.len() {
            return Err(CpError::DimensionMismatch {
                what: "arrival times",
                expected: nodes.len(),
                actual: arrival.len(),
            });
        }
        let entries = vec![CoverageEntry::NotPresent; nodes.len() * (num_timesteps + 1)];
        Ok(Self {
            nodes,
            arrival,
            num_timesteps,
            entries,
        })
    }

    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn num_timesteps(&self) -> usize {
        self.num_timesteps
    }

    fn row_of(&self, node: u32) -> Option<usize> {
        self.nodes.iter().position(|&v| v == node)
    }

    /// Record a verdict; rejects cells before the node's arrival.
    pub fn set(&mut self, node: u32, t: usize, covered: bool) -> CpResult<()> {
        let row = self.row_of(node).ok_or(CpError::InvalidParameter {
            name: "node",
            reason: format!("node {node} not tracked"),
        })?;
        if t < self.arrival[row] || t > self.num_timesteps {
            return Err(CpError::InactiveNode {
                node,
                timestep: t,
            });
        }
        self.entries[row * (self.num_timesteps + 1) + t] = if covered {
            CoverageEntry::Covered
        } else {
            CoverageEntry::Miscovered
        };
        Ok(())
    }

    pub fn entry(&self, node: u32, t: usize) -> Option<CoverageEntry> {
        let row = self.row_of(node)?;
        self.entries.get(row * (self.num_timesteps + 1) + t).copied()
    }

    /// Mean coverage over the evaluated cells of column `t`, if any.
    pub fn column_coverage(&self, t: usize) -> Option<f64> {
        let mut covered = 0usize;
        let mut total = 0usize;
        for row in 0..self.nodes.len() {
            match self.entries[row * (self.num_timesteps + 1) + t] {
                CoverageEntry::Covered => {
                    covered += 1;
                    total += 1;
                }
                CoverageEntry::Miscovered => total += 1,
                CoverageEntry::NotPresent => {}
            }
        }
        (total > 0).then(|| covered as f64 / total as f64)
    }
}

/// Fraction of records whose set contains the true label.
pub fn empirical_coverage(records: &[PredictionSetRecord]) -> CpResult<f64> {
    if records.is_empty() {
        return Err(CpError::EmptyInput { what: "records" });
    }
    Ok(records.iter().filter(|r| r.covered).count() as f64 / records.len() as f64)
}

/// `|coverage - (1 - alpha)|`, as a fraction; multiply by 100 for the
/// percent convention used in summaries.
pub fn deviation_from_target(records: &[PredictionSetRecord], alpha: f64) -> CpResult<f64> {
    Ok((empirical_coverage(records)? - (1.0 - alpha)).abs())
}

/// Mean prediction-set size.
pub fn avg_set_size(records: &[PredictionSetRecord]) -> CpResult<f64> {
    if records.is_empty() {
        return Err(CpError::EmptyInput { what: "records" });
    }
    Ok(records.iter().map(|r| r.set_size as f64).sum::<f64>() / records.len() as f64)
}

/// Fraction of records that are correct singletons.
pub fn singleton_hit_ratio(records: &[PredictionSetRecord]) -> CpResult<f64> {
    if records.is_empty() {
        return Err(CpError::EmptyInput { what: "records" });
    }
    Ok(records
        .iter()
        .filter(|r| r.set_size == 1 && r.covered)
        .count() as f64
        / records.len() as f64)
}

/// Wasserstein-1 distance between two empirical distributions: the integral
/// of `|CDF_a - CDF_b|` over the merged support. Exact for discrete samples
/// of any sizes.
pub fn emd_1d(samples_a: &[f64], samples_b: &[f64]) -> CpResult<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(CpError::EmptyInput { what: "emd samples" });
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut dist = 0.0;
    let mut prev = f64::NAN;
    while ia < a.len() || ib < b.len() {
        let x = match (a.get(ia), b.get(ib)) {
            (Some(&xa), Some(&xb)) => xa.min(xb),
            (Some(&xa), None) => xa,
            (None, Some(&xb)) => xb,
            (None, None) => unreachable!(),
        };
        if !prev.is_nan() && x > prev {
            let cdf_a = ia as f64 / na;
            let cdf_b = ib as f64 / nb;
            dist += (cdf_a - cdf_b).abs() * (x - prev);
        }
        while ia < a.len() && a[ia] == x {
            ia += 1;
        }
        while ib < b.len() && b[ib] == x {
            ib += 1;
        }
        prev = x;
    }
    Ok(dist)
}

/// Kolmogorov-Smirnov-style sup distance between the empirical CDF of
/// per-trial coverages and a supplied law, on a `beta` grid of step 0.01.
pub fn coverage_cdf_compare<F>(per_trial_coverages: &[f64], law: F) -> CpResult<f64>
where
    F: Fn(f64) -> f64,
{
    if per_trial_coverages.len() < 100 {
        return Err(CpError::TooFewTrials {
            got: per_trial_coverages.len(),
            needed: 100,
        });
    }
    let n = per_trial_coverages.len() as f64;
    let mut sup: f64 = 0.0;
    for i in 0..=100 {
        let beta = i as f64 / 100.0;
        let emp = per_trial_coverages
            .iter()
            .filter(|&&c| c <= beta + 1e-12)
            .count() as f64
            / n;
        sup = sup.max((emp - law(beta)).abs());
    }
    Ok(sup)
}

/// Per-timestep aggregate row for the experiment CSV output. Coverage, size,
/// and singleton-hit are running values over all records emitted up to and
/// including `t`; the EMD columns compare frozen calibration scores against
/// the current view (calibration side and test side).
#[derive(Debug, Clone, PartialEq)]
pub struct TimestepAggregate {
    pub seed: u64,
    pub engine: &'static str,
    pub t: usize,
    pub coverage: f64,
    pub avg_size: f64,
    pub singleton_hit: f64,
    pub emd_cal: f64,
    pub emd_test: f64,
}

pub const RECORD_CSV_HEADER: &str = "seed,engine,node_id,arrival_t,eval_t,set_size,covered,q_used";

pub fn record_csv_row(r: &PredictionSetRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.seed,
        r.engine,
        r.node,
        r.arrival_t,
        r.eval_t,
        r.set_size,
        u8::from(r.covered),
        r.q_used
    )
}

pub const AGGREGATE_CSV_HEADER: &str =
    "seed,engine,t,coverage,avg_size,singleton_hit,emd_cal,emd_test";

pub fn aggregate_csv_row(a: &TimestepAggregate) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        a.seed, a.engine, a.t, a.coverage, a.avg_size, a.singleton_hit, a.emd_cal, a.emd_test
    )
}
