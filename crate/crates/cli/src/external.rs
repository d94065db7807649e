//! External-scores mode: bypass the model and read per-timestep class
//! probability matrices from files.
//!
//! The directory holds one `probs_t{t}.csv` per needed timestep (at least the
//! calibration timestep and every evaluation timestep of the policy); row `i`
//! is the `i`-th active node in arrival order.

use std::path::PathBuf;

use graphcp_core::error::{CpError, CpResult};
use graphcp_core::model::ProbSource;
use graphcp_core::scores::ProbMatrix;
use graphcp_core::sequence::GraphView;
use ndarray::Array2;

pub struct FileProbSource {
    dir: PathBuf,
}

impl FileProbSource {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn path_for(&self, timestep: usize) -> PathBuf {
        self.dir.join(format!("probs_t{timestep}.csv"))
    }
}

impl ProbSource for FileProbSource {
    fn probabilities(&self, view: &GraphView<'_>) -> CpResult<ProbMatrix> {
        let path = self.path_for(view.timestep());
        let text = std::fs::read_to_string(&path).map_err(|e| CpError::InvalidParameter {
            name: "scores_dir",
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let row: Vec<f64> = trimmed
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| CpError::InvalidParameter {
                        name: "scores_dir",
                        reason: format!("{}:{}: {e}", path.display(), i + 1),
                    })
                })
                .collect::<CpResult<_>>()?;
            rows.push(row);
        }
        if rows.len() != view.num_active() {
            return Err(CpError::DimensionMismatch {
                what: "external probability rows",
                expected: view.num_active(),
                actual: rows.len(),
            });
        }
        let k = rows.first().map_or(0, |r| r.len());
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((view.num_active(), k), flat).map_err(|_| {
            CpError::InvalidParameter {
                name: "scores_dir",
                reason: format!("ragged rows in {}", path.display()),
            }
        })?;
        ProbMatrix::new(values)
    }
}
