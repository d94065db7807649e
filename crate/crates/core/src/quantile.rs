//! Weighted quantile calibration and prediction-set construction.
//!
//! Conformity scores are oriented so that higher means more conforming; a
//! prediction set keeps every label whose score clears a calibrated
//! threshold. Two thresholding rules live here:
//!
//! - [`weighted_quantile`]: the literal weighted quantile
//!   `inf { s_(i) : sum_{j<=i} w_(j) / (sum_j w_j + 1) >= alpha }`, the
//!   definitional object the coverage theory is phrased in.
//! - [`conformal_threshold`]: the calibration rule the engines use. It picks
//!   the *last* order statistic whose cumulative fraction stays `<= alpha`
//!   (the largest threshold with miscoverage mass at most `alpha`), which in
//!   the uniform-weight case is the `floor((n+1) * alpha)`-th smallest
//!   calibration score. This is the index rule that keeps empirical coverage
//!   at or above `1 - alpha`; the raw `inf`-rule overshoots the level by up
//!   to one order statistic (a `1/(n+1)` coverage error) whenever
//!   `(n+1) * alpha` is not an integer.

use crate::error::{CpError, CpResult};

/// One calibration sample: a conformity score with a nonnegative weight.
///
/// Scores of `+inf` are admitted to support the augmented-pool construction
/// (appending an infinite-score element makes the quantile total); weights
/// must be finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    pub score: f64,
    pub weight: f64,
}

impl WeightedSample {
    pub fn new(score: f64, weight: f64) -> CpResult<Self> {
        if score.is_nan() {
            return Err(CpError::InvalidParameter {
                name: "score",
                reason: "must not be NaN".into(),
            });
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(CpError::InvalidParameter {
                name: "weight",
                reason: format!("must be finite and >= 0, got {weight}"),
            });
        }
        Ok(Self { score, weight })
    }
}

fn validate(samples: &[WeightedSample], alpha: f64) -> CpResult<f64> {
    if samples.is_empty() {
        return Err(CpError::EmptyInput {
            what: "weighted quantile samples",
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CpError::InvalidParameter {
            name: "alpha",
            reason: format!("must lie in (0, 1), got {alpha}"),
        });
    }
    let mut total = 0.0;
    for s in samples {
        if s.score.is_nan() || !s.weight.is_finite() || s.weight < 0.0 {
            return Err(CpError::InvalidParameter {
                name: "samples",
                reason: format!("invalid sample (score {}, weight {})", s.score, s.weight),
            });
        }
        total += s.weight;
    }
    if total <= 0.0 {
        return Err(CpError::InvalidParameter {
            name: "samples",
            reason: "total weight must be positive".into(),
        });
    }
    Ok(total)
}

/// Ascending weight-carrying sort; ties in score keep input order.
fn sorted(samples: &[WeightedSample]) -> Vec<WeightedSample> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.score.partial_cmp(&b.score).expect("NaN rejected above"));
    v
}

/// The weighted quantile: smallest order statistic whose cumulative weight
/// fraction (with the `+ tail_mass` denominator) reaches `alpha`.
///
/// `tail_mass` generalizes the `+1` in the denominator; scaling all weights
/// by `c > 0` together with `tail_mass = c` leaves the comparator — and the
/// result — unchanged.
///
/// # Errors
///
/// [`CpError::InsufficientCalibrationMass`] when even the full cumulative
/// fraction stays below `alpha`, i.e. no index qualifies.
pub fn weighted_quantile_general(
    samples: &[WeightedSample],
    alpha: f64,
    tail_mass: f64,
) -> CpResult<f64> {
    let total = validate(samples, alpha)?;
    let denom = total + tail_mass;
    let mut cum = 0.0;
    for s in sorted(samples) {
        cum += s.weight;
        if cum / denom >= alpha {
            return Ok(s.score);
        }
    }
    Err(CpError::InsufficientCalibrationMass {
        alpha,
        max_fraction: total / denom,
    })
}

/// The weighted quantile with the standard `+1` tail mass.
pub fn weighted_quantile(samples: &[WeightedSample], alpha: f64) -> CpResult<f64> {
    weighted_quantile_general(samples, alpha, 1.0)
}

/// Calibration threshold used by the engines: the largest order statistic
/// whose cumulative weight fraction stays at or below `alpha`.
///
/// Returns `-inf` when even the first order statistic overshoots `alpha`
/// (the honest output is then the full label set). With uniform weights this
/// is the `floor((n+1) * alpha)`-th smallest score.
///
/// # Errors
///
/// [`CpError::InsufficientCalibrationMass`] under the same condition as
/// [`weighted_quantile`]: the full fraction never reaches `alpha`, which
/// flags an `alpha` far too large for the calibration set.
pub fn conformal_threshold(samples: &[WeightedSample], alpha: f64) -> CpResult<f64> {
    let total = validate(samples, alpha)?;
    let denom = total + 1.0;
    if total / denom < alpha {
        return Err(CpError::InsufficientCalibrationMass {
            alpha,
            max_fraction: total / denom,
        });
    }
    let mut threshold = f64::NEG_INFINITY;
    let mut cum = 0.0;
    for s in sorted(samples) {
        cum += s.weight;
        if cum / denom > alpha {
            break;
        }
        threshold = s.score;
    }
    Ok(threshold)
}

/// Labels whose score is at least `q` (threshold inclusive).
///
/// `q = -inf` keeps every label; `q` may also be `+inf` (empty set unless a
/// score is itself infinite). Labels are class indices into `label_scores`.
pub fn prediction_set(label_scores: &[f64], q: f64) -> Vec<usize> {
    label_scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= q)
        .map(|(i, _)| i)
        .collect()
}
