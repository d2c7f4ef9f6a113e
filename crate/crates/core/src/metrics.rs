//! Rate estimation, comparison baselines, target-achievement tests, and
//! exact conditional-error bounds for small models.

use std::collections::BTreeMap;

use crate::decoders::{decode_ml_bruteforce, Correction, DecodeError, Priors};
use crate::error_model::DetectorErrorModel;

/// Post-selected rate estimate with binomial standard errors and a 95%
/// Wilson interval for the conditional logical error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub shots: u64,
    pub accepted: u64,
    pub logical_errors: u64,
    /// Logical error rate among accepted shots; 0 and flagged when nothing
    /// was accepted.
    pub p_l: f64,
    pub sigma_l: f64,
    pub rejection_rate: f64,
    pub sigma_rejection: f64,
    pub p_l_wilson_95: (f64, f64),
    /// Set when `accepted == 0`, making `p_l` meaningless.
    pub no_accepted: bool,
}

impl RateEstimate {
    pub fn from_counts(shots: u64, accepted: u64, logical_errors: u64) -> Self {
        assert!(shots >= 1, "rate estimation requires at least one shot");
        assert!(accepted <= shots && logical_errors <= accepted);
        let no_accepted = accepted == 0;
        let p_l = if no_accepted {
            0.0
        } else {
            logical_errors as f64 / accepted as f64
        };
        let sigma_l = if no_accepted {
            0.0
        } else {
            (p_l * (1.0 - p_l) / accepted as f64).sqrt()
        };
        let rejection_rate = 1.0 - accepted as f64 / shots as f64;
        let sigma_rejection = (rejection_rate * (1.0 - rejection_rate) / shots as f64).sqrt();
        let p_l_wilson_95 = if no_accepted {
            (0.0, 1.0)
        } else {
            wilson_interval(logical_errors, accepted, 1.959963984540054)
        };
        Self {
            shots,
            accepted,
            logical_errors,
            p_l,
            sigma_l,
            rejection_rate,
            sigma_rejection,
            p_l_wilson_95,
            no_accepted,
        }
    }
}

/// Per-shot outcome consumed by [`estimate_rates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotOutcome {
    pub accepted: bool,
    pub logical_error: bool,
}

/// Folds a stream of outcomes into a [`RateEstimate`]; counting makes the
/// result independent of stream order.
pub fn estimate_rates(outcomes: impl IntoIterator<Item = ShotOutcome>) -> RateEstimate {
    let mut shots = 0;
    let mut accepted = 0;
    let mut logical_errors = 0;
    for outcome in outcomes {
        shots += 1;
        if outcome.accepted {
            accepted += 1;
            if outcome.logical_error {
                logical_errors += 1;
            }
        }
    }
    RateEstimate::from_counts(shots, accepted, logical_errors)
}

/// Wilson score interval for `successes` out of `trials` at normal quantile
/// `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials >= 1);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Whether a post-selected rate hits a target reduction of the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetOutcome {
    /// Within one combined standard deviation of `eta * p_l`.
    Achieved,
    /// Significantly below the target.
    Surpassed,
    Missed,
}

/// Tests whether `p_l_selected` achieves the target `eta * p_l_baseline`
/// within one combined standard deviation, or surpasses it.
pub fn target_achieved(
    p_l_baseline: f64,
    sigma_baseline: f64,
    p_l_selected: f64,
    sigma_selected: f64,
    eta: f64,
) -> TargetOutcome {
    assert!(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
    assert!(sigma_baseline >= 0.0 && sigma_selected >= 0.0);
    let target = eta * p_l_baseline;
    let radius = ((eta * sigma_baseline).powi(2) + sigma_selected.powi(2)).sqrt();
    if (target - p_l_selected).abs() <= radius {
        TargetOutcome::Achieved
    } else if target - p_l_selected > radius {
        TargetOutcome::Surpassed
    } else {
        TargetOutcome::Missed
    }
}

/// Detector-density baseline: accept iff at most `threshold` detectors fired.
pub fn strategy_detector_density(syndrome: &[bool], threshold: usize) -> bool {
    syndrome.iter().filter(|&&b| b).count() <= threshold
}

/// Correction-weight baseline: accept iff the correction's log-likelihood
/// weight `sum ln(1/p - 1)` stays at or below the threshold.
pub fn strategy_correction_weight(
    correction: &Correction,
    priors: &Priors,
    threshold: f64,
) -> bool {
    let weight: f64 = correction
        .support()
        .map(|q| (1.0 / priors[q] - 1.0).ln())
        .sum();
    weight <= threshold
}

/// Ratio of post-selected to baseline logical error rate, with the
/// first-order propagated standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuppressionFactor {
    pub value: f64,
    pub sigma: f64,
}

/// `selected.p_l / baseline.p_l`; `None` when the baseline recorded no
/// logical errors (the ratio is undefined).
pub fn suppression_factor(
    baseline: &RateEstimate,
    selected: &RateEstimate,
) -> Option<SuppressionFactor> {
    if baseline.p_l <= 0.0 {
        return None;
    }
    let value = selected.p_l / baseline.p_l;
    let sigma = ((selected.sigma_l / baseline.p_l).powi(2)
        + (selected.p_l * baseline.sigma_l / (baseline.p_l * baseline.p_l)).powi(2))
    .sqrt();
    Some(SuppressionFactor { value, sigma })
}

/// Exact conditional diagnostics for one syndrome of a small model.
///
/// `bound_complement` is `1 - Pr(c)/Pr(s)`, an upper bound on the
/// conditional logical error rate. `likelihood_gap` is the log-ratio between
/// the most and next-most probable consistent configurations, and
/// `bound_gap = (m - 1) e^{-gap}` bounds the conditional rate strictly when
/// at least two configurations are consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub syndrome: Vec<bool>,
    pub pr_syndrome: f64,
    pub p_l_cond: f64,
    pub bound_complement: f64,
    pub likelihood_gap: Option<f64>,
    pub num_consistent: u64,
    pub bound_gap: f64,
}

impl BoundReport {
    /// Both inequalities of the conditional-rate bound chain.
    pub fn holds(&self) -> bool {
        let first = self.p_l_cond <= self.bound_complement && self.bound_complement <= 1.0;
        let second = self.num_consistent < 2 || self.p_l_cond < self.bound_gap;
        first && second
    }
}

/// Evaluates the conditional logical error rate of raw maximum-likelihood
/// decoding for one syndrome, together with its two upper bounds.
pub fn check_conditional_bounds(
    model: &DetectorErrorModel,
    syndrome: &[bool],
) -> Result<BoundReport, DecodeError> {
    let solution = decode_ml_bruteforce(model, syndrome)?;
    let correction_class: Vec<bool> = {
        let observables = model.observable_matrix();
        let mut class = vec![false; observables.rows()];
        for q in solution.correction.support() {
            for &o in observables.column(q) {
                class[o as usize] ^= true;
            }
        }
        class
    };
    let class_mass = solution.class_likelihoods[&correction_class];
    let pr_syndrome = solution.pr_syndrome;
    let p_l_cond = 1.0 - class_mass / pr_syndrome;
    let pr_correction = solution.spectrum[0].probability;
    let bound_complement = 1.0 - pr_correction / pr_syndrome;
    let num_consistent = solution.spectrum.len() as u64;
    let likelihood_gap = (num_consistent >= 2).then(|| {
        solution.spectrum[0].log_probability - solution.spectrum[1].log_probability
    });
    let bound_gap = match likelihood_gap {
        Some(gap) => (num_consistent - 1) as f64 * (-gap).exp(),
        None => 0.0,
    };
    Ok(BoundReport {
        syndrome: syndrome.to_vec(),
        pr_syndrome,
        p_l_cond,
        bound_complement,
        likelihood_gap,
        num_consistent,
        bound_gap,
    })
}

/// Every syndrome in the column space of the model's check matrix, by
/// enumerating a basis of reachable syndromes. Capped by the brute-force
/// limit on mechanisms.
pub fn reachable_syndromes(model: &DetectorErrorModel) -> Result<Vec<Vec<bool>>, DecodeError> {
    if model.num_mechanisms() > crate::decoders::BRUTE_FORCE_CAP {
        return Err(DecodeError::TooManyMechanisms {
            count: model.num_mechanisms(),
            cap: crate::decoders::BRUTE_FORCE_CAP,
        });
    }
    // Gaussian elimination over the mechanism columns yields a basis.
    let detectors = model.num_detectors();
    let mut basis: Vec<Vec<bool>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for mech in model.mechanisms() {
        let mut v = vec![false; detectors];
        for &d in &mech.detectors {
            v[d as usize] ^= true;
        }
        for (b, &pivot) in basis.iter().zip(&pivots) {
            if v[pivot] {
                for (x, y) in v.iter_mut().zip(b) {
                    *x ^= y;
                }
            }
        }
        if let Some(pivot) = v.iter().position(|&bit| bit) {
            pivots.push(pivot);
            basis.push(v);
        }
    }
    let rank = basis.len();
    let mut out = Vec::with_capacity(1 << rank);
    for mask in 0u64..1 << rank {
        let mut s = vec![false; detectors];
        for (i, b) in basis.iter().enumerate() {
            if mask >> i & 1 == 1 {
                for (x, y) in s.iter_mut().zip(b) {
                    *x ^= y;
                }
            }
        }
        out.push(s);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Exact total logical error probability of raw maximum-likelihood decoding:
/// the syndrome-probability-weighted average of the conditional rates over
/// every reachable syndrome.
pub fn exact_total_logical_error_rate(model: &DetectorErrorModel) -> Result<f64, DecodeError> {
    let mut total = 0.0;
    for syndrome in reachable_syndromes(model)? {
        let report = check_conditional_bounds(model, &syndrome)?;
        total += report.pr_syndrome * report.p_l_cond;
    }
    Ok(total)
}

/// Per-class probability table for one syndrome, keyed by logical class;
/// exposed for harness-level cross-checks.
pub fn class_table(
    model: &DetectorErrorModel,
    syndrome: &[bool],
) -> Result<BTreeMap<Vec<bool>, f64>, DecodeError> {
    Ok(decode_ml_bruteforce(model, syndrome)?.class_likelihoods)
}
