//! Graph file ingestion and emission.
//!
//! Formats:
//! - edge list: two integer columns per line (whitespace- or comma-separated,
//!   0-based node ids); duplicates and self-loops are dropped with a count.
//! - features: CSV of reals, row `i` = node `i`.
//! - labels: single-column integer CSV, row `i` = node `i`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use graphcp_core::graph::{EdgeCleanup, Graph};
use ndarray::Array2;

fn parse_edge_line(line: &str) -> Option<Result<(u32, u32)>> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return None;
    }
    let mut parts = trimmed.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
    let a = parts.next();
    let b = parts.next();
    let extra = parts.next();
    Some(match (a, b, extra) {
        (Some(a), Some(b), None) => a
            .parse::<u32>()
            .and_then(|a| b.parse::<u32>().map(|b| (a, b)))
            .map_err(|e| anyhow::anyhow!("{e}")),
        _ => Err(anyhow::anyhow!("expected exactly two integer columns")),
    })
}

/// Load a graph from edge-list, feature, and label files.
///
/// Returns the graph and the counts of dropped self-loops / duplicate edges.
pub fn load_graph(edges: &Path, features: &Path, labels: &Path) -> Result<(Graph, EdgeCleanup)> {
    let label_text = fs::read_to_string(labels)
        .with_context(|| format!("reading labels from {}", labels.display()))?;
    let mut label_vec = Vec::new();
    for (i, line) in label_text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: u32 = trimmed
            .parse()
            .with_context(|| format!("{}:{}: invalid label '{trimmed}'", labels.display(), i + 1))?;
        label_vec.push(value);
    }
    let num_nodes = label_vec.len();

    let feat_text = fs::read_to_string(features)
        .with_context(|| format!("reading features from {}", features.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in feat_text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row: Vec<f64> = trimmed
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .with_context(|| format!("{}:{}: invalid feature '{f}'", features.display(), i + 1))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!(
                    "{}:{}: feature row has {} columns, expected {}",
                    features.display(),
                    i + 1,
                    row.len(),
                    first.len()
                );
            }
        }
        rows.push(row);
    }
    if rows.len() != num_nodes {
        bail!(
            "feature rows ({}) do not match label count ({})",
            rows.len(),
            num_nodes
        );
    }
    let feat_dim = rows.first().map_or(0, |r| r.len());
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let feature_matrix = Array2::from_shape_vec((num_nodes, feat_dim), flat)
        .context("assembling feature matrix")?;

    let edge_text = fs::read_to_string(edges)
        .with_context(|| format!("reading edges from {}", edges.display()))?;
    let mut edge_vec = Vec::new();
    for (i, line) in edge_text.lines().enumerate() {
        if let Some(parsed) = parse_edge_line(line) {
            let (a, b) =
                parsed.with_context(|| format!("{}:{}: bad edge line", edges.display(), i + 1))?;
            if a as usize >= num_nodes || b as usize >= num_nodes {
                bail!(
                    "{}:{}: edge ({a}, {b}) out of range for {num_nodes} nodes",
                    edges.display(),
                    i + 1
                );
            }
            edge_vec.push((a, b));
        }
    }

    Graph::with_cleanup(num_nodes, edge_vec, feature_matrix, label_vec)
        .map_err(|e| anyhow::anyhow!("{e}"))
}

/// Emit a graph to `dir` in the ingestion formats (edges.txt, features.csv,
/// labels.csv).
pub fn write_graph(graph: &Graph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut edges = String::new();
    for &(a, b) in graph.edges() {
        edges.push_str(&format!("{a} {b}\n"));
    }
    fs::write(dir.join("edges.txt"), edges)?;

    let mut features = String::new();
    for row in graph.features().outer_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        features.push_str(&cells.join(","));
        features.push('\n');
    }
    fs::write(dir.join("features.csv"), features)?;

    let mut labels = String::new();
    for &y in graph.labels() {
        labels.push_str(&format!("{y}\n"));
    }
    fs::write(dir.join("labels.csv"), labels)?;
    Ok(())
}
