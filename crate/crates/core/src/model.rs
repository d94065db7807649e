//! A minimal trainable permutation-equivariant node classifier.
//!
//! The model propagates node features `hops` times through the self-loop
//! normalized adjacency of the active subgraph and applies a linear softmax
//! head. With `hops = 0` it degrades to a structure-independent classifier.
//! Training is full-batch gradient descent on cross-entropy from a zero
//! initialization, so runs are deterministic without any seed.

use ndarray::{Array1, Array2};

use crate::error::{CpError, CpResult};
use crate::scores::ProbMatrix;
use crate::sequence::GraphView;

/// Sources of class probabilities conditional on a subgraph view.
///
/// Implemented by [`EquivariantClassifier`]; external-scores ingestion
/// implements the same trait to bypass the model entirely.
pub trait ProbSource {
    fn probabilities(&self, view: &GraphView<'_>) -> CpResult<ProbMatrix>;
}

/// Symmetric self-loop-normalized adjacency over a view's active nodes,
/// `D^{-1/2} (A + I) D^{-1/2}`, stored row-compressed and indexed by view
/// rows.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Build the normalized adjacency of a nonempty view.
pub fn normalized_adjacency(view: &GraphView<'_>) -> CpResult<NormalizedAdjacency> {
    let n = view.num_active();
    if n == 0 {
        return Err(CpError::EmptyInput { what: "view" });
    }
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut deg = vec![1.0f64; n]; // self-loop augmented
    for &(a, b) in view.edges() {
        let ra = view.row_of(a).expect("edge endpoint active");
        let rb = view.row_of(b).expect("edge endpoint active");
        deg[ra] += 1.0;
        deg[rb] += 1.0;
    }
    for (r, d) in deg.iter().enumerate() {
        rows[r].push((r as u32, 1.0 / d));
    }
    for &(a, b) in view.edges() {
        let ra = view.row_of(a).expect("active");
        let rb = view.row_of(b).expect("active");
        let w = 1.0 / (deg[ra] * deg[rb]).sqrt();
        rows[ra].push((rb as u32, w));
        rows[rb].push((ra as u32, w));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    for mut row in rows {
        row.sort_unstable_by_key(|&(c, _)| c);
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        offsets.push(cols.len());
    }
    Ok(NormalizedAdjacency {
        n,
        offsets,
        cols,
        vals,
    })
}

impl NormalizedAdjacency {
    pub fn num_rows(&self) -> usize {
        self.n
    }

    /// `self * x` for a dense right-hand side.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let d = x.ncols();
        let mut out = Array2::zeros((self.n, d));
        for r in 0..self.n {
            for idx in self.offsets[r]..self.offsets[r + 1] {
                let c = self.cols[idx] as usize;
                let w = self.vals[idx];
                for j in 0..d {
                    out[[r, j]] += w * x[[c, j]];
                }
            }
        }
        out
    }

    /// Dense materialization, for small-instance oracles.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for r in 0..self.n {
            for idx in self.offsets[r]..self.offsets[r + 1] {
                m[[r, self.cols[idx] as usize]] += self.vals[idx];
            }
        }
        m
    }
}

/// Diffused-feature linear softmax classifier.
#[derive(Debug, Clone)]
pub struct EquivariantClassifier {
    weight: Array2<f64>,
    bias: Array1<f64>,
    hops: usize,
}

impl EquivariantClassifier {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>, hops: usize) -> CpResult<Self> {
        if bias.len() != weight.ncols() {
            return Err(CpError::DimensionMismatch {
                what: "bias",
                expected: weight.ncols(),
                actual: bias.len(),
            });
        }
        if weight.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(CpError::InvalidParameter {
                name: "parameters",
                reason: "must be finite".into(),
            });
        }
        Ok(Self { weight, bias, hops })
    }

    pub fn zeros(feat_dim: usize, num_classes: usize, hops: usize) -> Self {
        Self {
            weight: Array2::zeros((feat_dim, num_classes)),
            bias: Array1::zeros(num_classes),
            hops,
        }
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn weight(&self) -> &Array2<f64> {
        &self.weight
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn num_classes(&self) -> usize {
        self.weight.ncols()
    }

    /// Diffused features of the view: `A_hat^hops * X` over active nodes.
    fn diffused_features(&self, view: &GraphView<'_>) -> CpResult<Array2<f64>> {
        let base = view.base();
        if base.feature_dim() != self.weight.nrows() {
            return Err(CpError::DimensionMismatch {
                what: "feature dim",
                expected: self.weight.nrows(),
                actual: base.feature_dim(),
            });
        }
        let n = view.num_active();
        let mut x = Array2::zeros((n, base.feature_dim()));
        for (row, &v) in view.active_nodes().iter().enumerate() {
            x.row_mut(row).assign(&base.features().row(v as usize));
        }
        if self.hops == 0 {
            return Ok(x);
        }
        let a_hat = normalized_adjacency(view)?;
        for _ in 0..self.hops {
            x = a_hat.apply(&x);
        }
        Ok(x)
    }

    /// Row-softmax class probabilities over the view's active nodes only.
    pub fn forward(&self, view: &GraphView<'_>) -> CpResult<ProbMatrix> {
        let z = self.diffused_features(view)?;
        let mut logits = z.dot(&self.weight);
        for mut row in logits.rows_mut() {
            row += &self.bias;
        }
        softmax_rows(&mut logits);
        ProbMatrix::new(logits)
    }
}

impl ProbSource for EquivariantClassifier {
    fn probabilities(&self, view: &GraphView<'_>) -> CpResult<ProbMatrix> {
        self.forward(view)
    }
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub hops: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hops: 2,
            learning_rate: 0.1,
            epochs: 300,
            l2: 5e-4,
        }
    }
}

/// A trained classifier together with its per-epoch loss trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub classifier: EquivariantClassifier,
    pub loss_trace: Vec<f64>,
}

/// Cross-entropy loss and parameter gradients for one diffused-feature batch.
fn loss_and_grads(
    z: &Array2<f64>,
    labels: &[u32],
    train_rows: &[usize],
    w: &Array2<f64>,
    b: &Array1<f64>,
    l2: f64,
) -> (f64, Array2<f64>, Array1<f64>) {
    let k = w.ncols();
    let m = train_rows.len() as f64;
    let mut grad_w = w * l2;
    let mut grad_b = Array1::zeros(k);
    let mut loss = 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    for &row in train_rows {
        let zr = z.row(row);
        let mut logits: Vec<f64> = (0..k).map(|c| zr.dot(&w.column(c)) + b[c]).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in logits.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let y = labels[row] as usize;
        loss += -(logits[y] / sum).ln() / m;
        for c in 0..k {
            let p = logits[c] / sum;
            let g = (p - if c == y { 1.0 } else { 0.0 }) / m;
            grad_b[c] += g;
            for d in 0..w.nrows() {
                grad_w[[d, c]] += g * zr[d];
            }
        }
    }
    (loss, grad_w, grad_b)
}

/// Train on the labeled `train_nodes` of `view_g0` by full-batch gradient
/// descent from zero initialization. Deterministic; returns the classifier
/// and the pre-update loss per epoch.
pub fn train(
    view_g0: &GraphView<'_>,
    train_nodes: &[u32],
    config: &TrainConfig,
) -> CpResult<TrainOutcome> {
    if train_nodes.is_empty() {
        return Err(CpError::EmptyInput { what: "train nodes" });
    }
    let base = view_g0.base();
    let k = base.num_classes();
    let mut train_rows = Vec::with_capacity(train_nodes.len());
    for &v in train_nodes {
        match view_g0.row_of(v) {
            Some(r) => train_rows.push(r),
            None => {
                return Err(CpError::InactiveNode {
                    node: v,
                    timestep: view_g0.timestep(),
                })
            }
        }
    }
    let labels: Vec<u32> = view_g0
        .active_nodes()
        .iter()
        .map(|&v| base.label(v))
        .collect();

    let model = EquivariantClassifier::zeros(base.feature_dim(), k, config.hops);
    let z = model.diffused_features(view_g0)?;
    let mut w = model.weight;
    let mut b = model.bias;
    let mut trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (loss, gw, gb) = loss_and_grads(&z, &labels, &train_rows, &w, &b, config.l2);
        trace.push(loss);
        w = w - config.learning_rate * &gw;
        b = b - config.learning_rate * &gb;
    }
    Ok(TrainOutcome {
        classifier: EquivariantClassifier::new(w, b, config.hops)?,
        loss_trace: trace,
    })
}
