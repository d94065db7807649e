//! Exact theoretical coverage distributions.
//!
//! These laws describe how empirical coverage of conformal prediction sets is
//! distributed when calibration and evaluation points are exchangeable. They
//! serve as validation oracles for the simulation harness: an engine is
//! healthy when its Monte-Carlo coverage histogram matches the corresponding
//! law.

use crate::error::{CpError, CpResult};
use crate::numeric::{beta_reg, ln_binomial};

/// Parameters of the finite-population coverage law.
///
/// `i_alpha = ceil((n_cal + 1) * (1 - alpha))` is the count of calibration
/// order statistics at or above the conformal threshold; the threshold itself
/// is the `(n_cal + 1 - i_alpha)`-th smallest calibration score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageLawParams {
    pub n_cal: usize,
    pub m_eval: usize,
    pub alpha: f64,
    pub i_alpha: usize,
}

impl CoverageLawParams {
    pub fn new(n_cal: usize, m_eval: usize, alpha: f64) -> CpResult<Self> {
        if n_cal == 0 {
            return Err(CpError::InvalidParameter {
                name: "n_cal",
                reason: "must be positive".into(),
            });
        }
        if m_eval == 0 {
            return Err(CpError::InvalidParameter {
                name: "m_eval",
                reason: "must be positive".into(),
            });
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CpError::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0, 1), got {alpha}"),
            });
        }
        let i_alpha = quantile_index_from_top(n_cal, alpha);
        debug_assert!(i_alpha >= 1 && i_alpha <= n_cal + 1);
        Ok(Self {
            n_cal,
            m_eval,
            alpha,
            i_alpha,
        })
    }
}

/// `ceil((n + 1) * (1 - alpha))` with a guard against float roundoff at
/// integer boundaries.
pub(crate) fn quantile_index_from_top(n_cal: usize, alpha: f64) -> usize {
    (((n_cal as f64 + 1.0) * (1.0 - alpha)) - 1e-9).ceil() as usize
}

/// `floor((n + 1) * alpha)`, the threshold index from below.
pub(crate) fn quantile_index_from_bottom(n_cal: usize, alpha: f64) -> usize {
    (((n_cal as f64 + 1.0) * alpha) + 1e-9).floor() as usize
}

/// Hypergeometric CDF `P(X <= k)` for a population of size `pop` containing
/// `successes` marked items, from which `draws` items are drawn without
/// replacement.
///
/// Probabilities accumulate in log space term by term, which stays stable for
/// populations in the thousands.
///
/// # Errors
///
/// Domain violation when `draws > pop` or `successes > pop`.
pub fn hypergeom_cdf(k: i64, pop: u64, draws: u64, successes: u64) -> CpResult<f64> {
    if draws > pop {
        return Err(CpError::InvalidParameter {
            name: "draws",
            reason: format!("draws {draws} exceeds population {pop}"),
        });
    }
    if successes > pop {
        return Err(CpError::InvalidParameter {
            name: "successes",
            reason: format!("successes {successes} exceeds population {pop}"),
        });
    }
    let lo = (draws + successes).saturating_sub(pop);
    let hi = draws.min(successes);
    if k < lo as i64 {
        return Ok(0.0);
    }
    if k >= hi as i64 {
        return Ok(1.0);
    }
    let ln_denom = ln_binomial(pop, draws);
    let mut cdf = 0.0;
    for x in lo..=(k as u64) {
        let ln_pmf =
            ln_binomial(successes, x) + ln_binomial(pop - successes, draws - x) - ln_denom;
        cdf += ln_pmf.exp();
    }
    Ok(cdf.clamp(0.0, 1.0))
}

/// Shared finite-population coverage law: `P(Cov <= level)` when `n` of
/// `n + m` exchangeable scores calibrate the threshold and coverage is
/// measured over the remaining `m`.
fn finite_population_law(n: usize, m: usize, i_alpha: usize, level: f64) -> CpResult<f64> {
    if i_alpha > n {
        // The threshold sits below all calibration mass, sets are complete
        // and coverage is almost surely 1.
        return Ok(if level >= 1.0 { 1.0 } else { 0.0 });
    }
    // count of evaluation points allowed to be covered while staying <= level
    let covered = ((m as f64 * level) + 1e-9).floor().clamp(0.0, m as f64) as u64;
    let phi = hypergeom_cdf(
        i_alpha as i64 - 1,
        (m + n) as u64,
        n as u64,
        covered + i_alpha as u64,
    )?;
    Ok(1.0 - phi)
}

/// `P(Cov <= t)` for transductive evaluation over a fixed population of
/// `m_eval` test points. Used as a validation oracle against empirical
/// coverage histograms.
pub fn transductive_coverage_law(params: &CoverageLawParams, t: f64) -> CpResult<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(CpError::InvalidParameter {
            name: "t",
            reason: format!("must lie in [0, 1], got {t}"),
        });
    }
    finite_population_law(params.n_cal, params.m_eval, params.i_alpha, t)
}

/// `P(Cov <= beta)` over an evaluation mask of `m_eval` nodes on a
/// node-exchangeable sequence. Identical in form to the transductive law:
/// the mask plays the role of the test population.
pub fn nodeex_coverage_law(n_cal: usize, m_eval: usize, alpha: f64, beta: f64) -> CpResult<f64> {
    let params = CoverageLawParams::new(n_cal, m_eval, alpha)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(CpError::InvalidParameter {
            name: "beta",
            reason: format!("must lie in [0, 1], got {beta}"),
        });
    }
    finite_population_law(params.n_cal, params.m_eval, params.i_alpha, beta)
}

/// Parameters `(a, b)` of the `Beta(n + 1 - l, l)` coverage distribution with
/// `l = floor((n + 1) * alpha)`, valid in the infinite-test-population limit.
///
/// # Errors
///
/// [`CpError::DegenerateLaw`] when `l = 0`: the calibration set is too small
/// for the requested `alpha` and the Beta law is undefined.
pub fn beta_coverage_params(n_cal: usize, alpha: f64) -> CpResult<(f64, f64)> {
    if n_cal == 0 {
        return Err(CpError::InvalidParameter {
            name: "n_cal",
            reason: "must be positive".into(),
        });
    }
    let l = quantile_index_from_bottom(n_cal, alpha);
    if l == 0 {
        return Err(CpError::DegenerateLaw { n_cal, alpha });
    }
    Ok(((n_cal + 1 - l) as f64, l as f64))
}

/// CDF of the Beta coverage law at `x`.
pub fn beta_coverage_cdf(n_cal: usize, alpha: f64, x: f64) -> CpResult<f64> {
    let (a, b) = beta_coverage_params(n_cal, alpha)?;
    Ok(beta_reg(a, b, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Exact hypergeometric CDF with u128 integer arithmetic; valid for
    /// populations small enough that binomial coefficients fit (pop <= 20 is
    /// far inside the range).
    fn exact_cdf(k: i64, pop: u64, draws: u64, successes: u64) -> f64 {
        fn binom(n: u64, k: u64) -> u128 {
            if k > n {
                return 0;
            }
            let mut acc: u128 = 1;
            for i in 0..k.min(n - k) {
                acc = acc * (n - i) as u128 / (i + 1) as u128;
            }
            acc
        }
        let mut num: u128 = 0;
        let den = binom(pop, draws);
        let hi = draws.min(successes);
        for x in 0..=hi {
            if (x as i64) > k {
                break;
            }
            num += binom(successes, x) * binom(pop - successes, draws - x);
        }
        num as f64 / den as f64
    }

    #[test]
    fn cdf_support_edges() {
        // k at or above the support maximum
        assert_eq!(hypergeom_cdf(5, 10, 5, 7).unwrap(), 1.0);
        // k below the support minimum: draws + successes - pop = 2
        assert_eq!(hypergeom_cdf(1, 10, 5, 7).unwrap(), 0.0);
        assert_eq!(hypergeom_cdf(-1, 10, 5, 5).unwrap(), 0.0);
    }

    #[test]
    fn cdf_rejects_bad_domains() {
        assert!(hypergeom_cdf(0, 5, 6, 2).is_err());
        assert!(hypergeom_cdf(0, 5, 2, 6).is_err());
    }

    #[test]
    fn cdf_matches_exact_enumeration_small_pops() {
        for pop in 0..=12u64 {
            for draws in 0..=pop {
                for successes in 0..=pop {
                    for k in -1..=(draws.min(successes) as i64 + 1) {
                        let got = hypergeom_cdf(k, pop, draws, successes).unwrap();
                        let want = exact_cdf(k, pop, draws, successes);
                        assert!(
                            (got - want).abs() <= 1e-12,
                            "pop={pop} draws={draws} succ={successes} k={k}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pmf_from_cdf_differences_is_nonnegative() {
        for k in 0..=30i64 {
            let d = hypergeom_cdf(k, 60, 30, 25).unwrap() - hypergeom_cdf(k - 1, 60, 30, 25).unwrap();
            assert!(d >= -1e-15, "negative pmf at k={k}");
        }
    }

    /// Scores-level split-CP simulation matching the engines' threshold rule.
    fn simulate_coverages(n: usize, m: usize, alpha: f64, trials: usize, seed: u64) -> Vec<f64> {
        let l = quantile_index_from_bottom(n, alpha);
        assert!(l >= 1, "degenerate setup");
        let mut rng = crate::rng::substream(seed, &[0xC0]);
        (0..trials)
            .map(|_| {
                let mut cal: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                cal.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let tau = cal[l - 1];
                let covered = (0..m).filter(|_| rng.gen::<f64>() >= tau).count();
                covered as f64 / m as f64
            })
            .collect()
    }

    fn sup_distance_on_grid(coverages: &[f64], law: impl Fn(f64) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=100 {
            let beta = i as f64 / 100.0;
            let emp = coverages.iter().filter(|&&c| c <= beta + 1e-12).count() as f64
                / coverages.len() as f64;
            worst = worst.max((emp - law(beta)).abs());
        }
        worst
    }

    #[test]
    fn transductive_law_trivials() {
        let p = CoverageLawParams::new(20, 50, 0.1).unwrap();
        assert_eq!(transductive_coverage_law(&p, 1.0).unwrap(), 1.0);
        let mut prev = 0.0;
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let v = transductive_coverage_law(&p, t).unwrap();
            assert!(v >= prev - 1e-12, "not monotone at t={t}");
            prev = v;
        }
    }

    #[test]
    fn transductive_law_matches_monte_carlo() {
        let p = CoverageLawParams::new(20, 50, 0.1).unwrap();
        let covs = simulate_coverages(20, 50, 0.1, 20_000, 7);
        let sup = sup_distance_on_grid(&covs, |t| transductive_coverage_law(&p, t).unwrap());
        assert!(sup <= 0.03, "sup distance {sup}");
    }

    #[test]
    fn beta_params_direct_substitution() {
        assert_eq!(beta_coverage_params(9, 0.1).unwrap(), (9.0, 1.0));
        assert_eq!(beta_coverage_params(99, 0.1).unwrap(), (90.0, 10.0));
        assert!(matches!(
            beta_coverage_params(3, 0.1),
            Err(CpError::DegenerateLaw { .. })
        ));
    }

    #[test]
    fn beta_mean_matches_monte_carlo() {
        let (a, b) = beta_coverage_params(99, 0.1).unwrap();
        let covs = simulate_coverages(99, 400, 0.1, 20_000, 11);
        let mc_mean: f64 = covs.iter().sum::<f64>() / covs.len() as f64;
        let law_mean = a / (a + b);
        assert!(
            (mc_mean - law_mean).abs() < 0.005,
            "mc {mc_mean} vs law {law_mean}"
        );
    }

    #[test]
    fn nodeex_law_trivials() {
        assert_eq!(nodeex_coverage_law(40, 200, 0.1, 1.0).unwrap(), 1.0);
        let mut prev = 0.0;
        for i in 0..=50 {
            let beta = i as f64 / 50.0;
            let v = nodeex_coverage_law(40, 200, 0.1, beta).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn degenerate_index_means_full_sets() {
        // alpha below 1/(n+1): threshold -inf, coverage a.s. 1
        let law = nodeex_coverage_law(3, 10, 0.1, 0.99).unwrap();
        assert_eq!(law, 0.0);
        assert_eq!(nodeex_coverage_law(3, 10, 0.1, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn index_helpers_agree() {
        let mut rng = crate::rng::substream(5, &[9]);
        for _ in 0..500 {
            let n = rng.gen_range(1..400usize);
            let alpha: f64 = rng.gen_range(0.001..0.999);
            let top = quantile_index_from_top(n, alpha);
            let bottom = quantile_index_from_bottom(n, alpha);
            assert_eq!(top + bottom, n + 1, "n={n} alpha={alpha}");
        }
    }
}
