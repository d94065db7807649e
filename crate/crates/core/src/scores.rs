//! Conformity score functions over model probability outputs.
//!
//! All scores are oriented "higher = more conforming". Rows of every matrix
//! follow the node ordering of the view they were computed on.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CpError, CpResult};
use crate::sequence::GraphView;

/// Which conformity score to compute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScoreKind {
    /// Raw softmax probability of the candidate class.
    Tps,
    /// Negated cumulative probability mass of classes more likely than the
    /// candidate, with per-node uniform tie-breaking noise.
    Aps,
    /// APS diffused one hop over the active neighborhood.
    Daps { lambda: f64 },
}

impl ScoreKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreKind::Tps => "tps",
            ScoreKind::Aps => "aps",
            ScoreKind::Daps { .. } => "daps",
        }
    }
}

/// Row-stochastic class probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    values: Array2<f64>,
}

impl ProbMatrix {
    /// Validate entries in `[0, 1]` and rows summing to 1 within `1e-9`.
    pub fn new(values: Array2<f64>) -> CpResult<Self> {
        for (i, row) in values.outer_iter().enumerate() {
            let mut sum = 0.0;
            for &p in row {
                if !(-1e-12..=1.0 + 1e-12).contains(&p) {
                    return Err(CpError::InvalidParameter {
                        name: "probs",
                        reason: format!("entry {p} in row {i} outside [0, 1]"),
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CpError::InvalidParameter {
                    name: "probs",
                    reason: format!("row {i} sums to {sum}"),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn num_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.values.ncols()
    }
}

/// Where a score matrix came from: score kind, the view timestep it was
/// computed at, and the RNG stream key of its tie-breaking noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreProvenance {
    pub kind: &'static str,
    pub timestep: usize,
    pub stream: u64,
}

/// Per-node, per-class conformity scores conditional on one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    values: Array2<f64>,
    provenance: ScoreProvenance,
}

impl ScoreMatrix {
    pub fn new(values: Array2<f64>, provenance: ScoreProvenance) -> Self {
        Self { values, provenance }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).to_vec()
    }

    pub fn provenance(&self) -> ScoreProvenance {
        self.provenance
    }
}

/// TPS: the softmax output itself, `s[v, y] = p(v)_y`.
pub fn tps_scores(probs: &ProbMatrix, timestep: usize) -> ScoreMatrix {
    ScoreMatrix::new(
        probs.values.clone(),
        ScoreProvenance {
            kind: "tps",
            timestep,
            stream: 0,
        },
    )
}

/// APS: `s[v, y] = -(rho(v, y) + u_v * p(v)_y)` where `rho` sums the mass of
/// classes predicted strictly more likely than `y`, and `u_v in [0, 1]` is
/// one uniform draw per node shared across that node's classes.
pub fn aps_scores(
    probs: &ProbMatrix,
    u: &[f64],
    timestep: usize,
    stream: u64,
) -> CpResult<ScoreMatrix> {
    if u.len() != probs.num_rows() {
        return Err(CpError::DimensionMismatch {
            what: "aps noise",
            expected: probs.num_rows(),
            actual: u.len(),
        });
    }
    if let Some(&bad) = u.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        return Err(CpError::InvalidParameter {
            name: "u",
            reason: format!("noise {bad} outside [0, 1]"),
        });
    }
    let k = probs.num_classes();
    let mut scores = Array2::zeros((probs.num_rows(), k));
    let mut order: Vec<usize> = Vec::with_capacity(k);
    for (v, row) in probs.values.outer_iter().enumerate() {
        order.clear();
        order.extend(0..k);
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).expect("validated probs"));
        // walk descending groups of equal mass; rho excludes the tie group
        let mut cum_before = 0.0;
        let mut idx = 0;
        while idx < k {
            let mut group_end = idx;
            while group_end + 1 < k && row[order[group_end + 1]] == row[order[idx]] {
                group_end += 1;
            }
            let mut group_sum = 0.0;
            for &y in &order[idx..=group_end] {
                scores[[v, y]] = -(cum_before + u[v] * row[y]);
                group_sum += row[y];
            }
            cum_before += group_sum;
            idx = group_end + 1;
        }
    }
    Ok(ScoreMatrix::new(
        scores,
        ScoreProvenance {
            kind: "aps",
            timestep,
            stream,
        },
    ))
}

/// DAPS: one-hop neighbor averaging of a base score matrix over the view's
/// active structure, `s'[v] = (1 - lambda) * s[v] + lambda * mean_{u ~ v} s[u]`.
/// Isolated nodes keep their base scores.
pub fn daps_scores(
    base: &ScoreMatrix,
    view: &GraphView<'_>,
    lambda: f64,
) -> CpResult<ScoreMatrix> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CpError::InvalidParameter {
            name: "lambda",
            reason: format!("must lie in [0, 1], got {lambda}"),
        });
    }
    if base.values.nrows() != view.num_active() {
        return Err(CpError::DimensionMismatch {
            what: "daps base rows",
            expected: view.num_active(),
            actual: base.values.nrows(),
        });
    }
    let k = base.values.ncols();
    let mut out = Array2::zeros((view.num_active(), k));
    for (row, &v) in view.active_nodes().iter().enumerate() {
        let neighbors = view.neighbors(v);
        if neighbors.is_empty() {
            out.row_mut(row).assign(&base.values.row(row));
            continue;
        }
        let scale = lambda / neighbors.len() as f64;
        for c in 0..k {
            let mut acc = (1.0 - lambda) * base.values[[row, c]];
            for &nb in neighbors {
                let nb_row = view.row_of(nb).expect("active neighbor");
                acc += scale * base.values[[nb_row, c]];
            }
            out[[row, c]] = acc;
        }
    }
    Ok(ScoreMatrix::new(
        out,
        ScoreProvenance {
            kind: "daps",
            timestep: base.provenance.timestep,
            stream: base.provenance.stream,
        },
    ))
}

/// Per-node APS tie-breaking noise keyed by `(seed, timestep, node, salt)`.
///
/// Fresh draws at every recomputation keep scores tie-free while staying
/// reproducible; `salt` separates replicate score computations at the same
/// timestep (subgraph voting).
pub fn aps_noise(seed: u64, timestep: usize, salt: u64, nodes: &[u32]) -> Vec<f64> {
    nodes
        .iter()
        .map(|&v| crate::rng::keyed_uniform(seed, &[0xA5, timestep as u64, salt, v as u64]))
        .collect()
}
