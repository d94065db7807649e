//! Sparse undirected graph storage with node features and labels.

use ndarray::Array2;

use crate::error::{CpError, CpResult};

/// Counts of edges discarded while normalizing an input edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeCleanup {
    pub self_loops: usize,
    pub duplicates: usize,
}

/// An undirected simple graph with per-node feature vectors and class labels.
///
/// Edges are stored once with endpoints ordered `(a, b), a < b`; directed
/// input is symmetrized at construction. Self-loops are never stored (the
/// model adds its own self-loop normalization).
#[derive(Debug, Clone)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(u32, u32)>,
    features: Array2<f64>,
    labels: Vec<u32>,
    node_ids: Vec<u64>,
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Build a graph, dropping self-loops and duplicate edges, and report how
    /// many were dropped.
    pub fn with_cleanup(
        num_nodes: usize,
        edges: Vec<(u32, u32)>,
        features: Array2<f64>,
        labels: Vec<u32>,
    ) -> CpResult<(Self, EdgeCleanup)> {
        if features.nrows() != num_nodes {
            return Err(CpError::DimensionMismatch {
                what: "feature rows",
                expected: num_nodes,
                actual: features.nrows(),
            });
        }
        if labels.len() != num_nodes {
            return Err(CpError::DimensionMismatch {
                what: "labels",
                expected: num_nodes,
                actual: labels.len(),
            });
        }
        let mut cleanup = EdgeCleanup::default();
        let mut normalized: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a as usize >= num_nodes || b as usize >= num_nodes {
                return Err(CpError::InvalidParameter {
                    name: "edges",
                    reason: format!("edge ({a}, {b}) exceeds num_nodes {num_nodes}"),
                });
            }
            if a == b {
                cleanup.self_loops += 1;
                continue;
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        let before = normalized.len();
        normalized.dedup();
        cleanup.duplicates = before - normalized.len();

        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(a, b) in &normalized {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }

        let node_ids = (0..num_nodes as u64).collect();
        Ok((
            Self {
                num_nodes,
                edges: normalized,
                features,
                labels,
                node_ids,
                adjacency,
            },
            cleanup,
        ))
    }

    /// Build a graph, silently dropping self-loops and duplicates.
    pub fn new(
        num_nodes: usize,
        edges: Vec<(u32, u32)>,
        features: Array2<f64>,
        labels: Vec<u32>,
    ) -> CpResult<Self> {
        Ok(Self::with_cleanup(num_nodes, edges, features, labels)?.0)
    }

    /// Replace features and labels, e.g. after sampling a bare topology.
    pub fn with_attributes(mut self, features: Array2<f64>, labels: Vec<u32>) -> CpResult<Self> {
        if features.nrows() != self.num_nodes {
            return Err(CpError::DimensionMismatch {
                what: "feature rows",
                expected: self.num_nodes,
                actual: features.nrows(),
            });
        }
        if labels.len() != self.num_nodes {
            return Err(CpError::DimensionMismatch {
                what: "labels",
                expected: self.num_nodes,
                actual: labels.len(),
            });
        }
        self.features = features;
        self.labels = labels;
        Ok(self)
    }

    /// Override the stable global node identifiers (defaults to `0..n`).
    pub fn with_node_ids(mut self, node_ids: Vec<u64>) -> CpResult<Self> {
        if node_ids.len() != self.num_nodes {
            return Err(CpError::DimensionMismatch {
                what: "node_ids",
                expected: self.num_nodes,
                actual: node_ids.len(),
            });
        }
        self.node_ids = node_ids;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Normalized undirected edge list, endpoints ordered, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, v: u32) -> u32 {
        self.labels[v as usize]
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    /// Relabel nodes: node `i` becomes `perm[i]`. Features, labels, ids, and
    /// edges move with their nodes. `perm` must be a bijection on `0..n`.
    pub fn relabeled(&self, perm: &[u32]) -> CpResult<Self> {
        if perm.len() != self.num_nodes {
            return Err(CpError::DimensionMismatch {
                what: "permutation",
                expected: self.num_nodes,
                actual: perm.len(),
            });
        }
        let mut seen = vec![false; self.num_nodes];
        for &p in perm {
            if p as usize >= self.num_nodes || seen[p as usize] {
                return Err(CpError::InvalidParameter {
                    name: "perm",
                    reason: "not a bijection".into(),
                });
            }
            seen[p as usize] = true;
        }
        let mut features = Array2::zeros((self.num_nodes, self.feature_dim()));
        let mut labels = vec![0u32; self.num_nodes];
        let mut node_ids = vec![0u64; self.num_nodes];
        for (i, &p) in perm.iter().enumerate() {
            let j = p as usize;
            features.row_mut(j).assign(&self.features.row(i));
            labels[j] = self.labels[i];
            node_ids[j] = self.node_ids[i];
        }
        let edges = self
            .edges
            .iter()
            .map(|&(a, b)| (perm[a as usize], perm[b as usize]))
            .collect();
        let graph = Self::new(self.num_nodes, edges, features, labels)?;
        graph.with_node_ids(node_ids)
    }
}
