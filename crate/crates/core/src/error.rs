//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by calibration, graph, model, and evaluation routines.
#[derive(Debug, Clone, Error)]
pub enum CpError {
    /// Even the full cumulative weight fraction stays below the requested
    /// level, so no quantile index qualifies. Emitting an empty prediction
    /// set here would silently break the coverage contract.
    #[error(
        "insufficient calibration mass: cumulative fraction {max_fraction} < alpha {alpha}"
    )]
    InsufficientCalibrationMass { alpha: f64, max_fraction: f64 },

    /// The Beta coverage law is undefined because `floor((n+1) * alpha) = 0`;
    /// the calibration set is too small for the requested alpha.
    #[error("degenerate coverage law: n_cal {n_cal} too small for alpha {alpha}")]
    DegenerateLaw { n_cal: usize, alpha: f64 },

    /// A parameter is outside its admissible domain.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An operation received an empty collection it cannot work with.
    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },

    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A node was addressed in a view where it is not active.
    #[error("node {node} is not active at timestep {timestep}")]
    InactiveNode { node: u32, timestep: usize },

    /// A timestep outside the schedule was requested.
    #[error("timestep {t} out of range (schedule length {len})")]
    TimestepOutOfRange { t: usize, len: usize },

    /// A calibration node has degree zero where degree weights are required;
    /// on an edge-inductive schedule this indicates a corrupted schedule.
    #[error("calibration node {node} has degree 0 at timestep {timestep}")]
    ZeroDegreeCalibration { node: u32, timestep: usize },

    /// Too few Monte-Carlo trials for a distribution comparison.
    #[error("too few trials: got {got}, need at least {needed}")]
    TooFewTrials { got: usize, needed: usize },
}

pub type CpResult<T> = Result<T, CpError>;
