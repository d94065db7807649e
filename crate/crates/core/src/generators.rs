//! Synthetic graph samplers: graphon draws and a homophilous block model.

use ndarray::Array2;
use rand::Rng;

use crate::error::{CpError, CpResult};
use crate::graph::Graph;

/// Standard normal via Box-Muller; keeps the dependency tree flat.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sample an undirected simple graph from a graphon: latent `u_i ~ U[0,1]`
/// per vertex, edge `(i, j)` with probability `w(u_i, u_j)`.
///
/// The caller is expected to supply a symmetric `w`; features and labels are
/// left empty for the caller to attach.
pub fn graphon_sample<W, R>(w: W, n: usize, rng: &mut R) -> CpResult<Graph>
where
    W: Fn(f64, f64) -> f64,
    R: Rng,
{
    if n == 0 {
        return Err(CpError::InvalidParameter {
            name: "n",
            reason: "must be at least 1".into(),
        });
    }
    let latents: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = w(latents[i], latents[j]).clamp(0.0, 1.0);
            if rng.gen::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Graph::new(n, edges, Array2::zeros((n, 0)), vec![0; n])
}

/// Homophilous stochastic block model with class-aligned blocks.
///
/// Labels are assigned round-robin (`node i -> class i mod k`), edges appear
/// with probability `p_in` within a class and `p_out` across classes, and
/// features are unit-variance Gaussians around per-class means separated by
/// `feat_separation` along one axis per class.
pub fn sbm_homophilous<R: Rng>(
    n: usize,
    k_classes: usize,
    p_in: f64,
    p_out: f64,
    feat_dim: usize,
    feat_separation: f64,
    rng: &mut R,
) -> CpResult<Graph> {
    if n == 0 || k_classes == 0 {
        return Err(CpError::InvalidParameter {
            name: "n/k_classes",
            reason: "must be at least 1".into(),
        });
    }
    if !(0.0..=1.0).contains(&p_out) || !(0.0..=1.0).contains(&p_in) || p_out > p_in {
        return Err(CpError::InvalidParameter {
            name: "p_in/p_out",
            reason: format!("need 0 <= p_out <= p_in <= 1, got p_in={p_in} p_out={p_out}"),
        });
    }
    if feat_dim == 0 {
        return Err(CpError::InvalidParameter {
            name: "feat_dim",
            reason: "must be at least 1".into(),
        });
    }
    let labels: Vec<u32> = (0..n).map(|i| (i % k_classes) as u32).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let mut features = Array2::zeros((n, feat_dim));
    for i in 0..n {
        let axis = labels[i] as usize % feat_dim;
        for d in 0..feat_dim {
            let mean = if d == axis { feat_separation } else { 0.0 };
            features[[i, d]] = mean + gaussian(rng);
        }
    }
    Graph::new(n, edges, features, labels)
}
