//! Multi-round post-selection decoding under reweighted error models.
//!
//! After a first decode produces a correction, the priors of the mechanisms
//! in that correction are suppressed and the syndrome is decoded again; a
//! shot is accepted only when the rounds agree. Two suppression rules are
//! provided. The ratio rule raises each prior in the correction to the power
//! `b`, so the correction's total likelihood is exactly exponentiated:
//! `prod p'(q) = (prod p(q))^b`. The gap rule spreads a fixed penalty over
//! the correction, scaling each member so that
//! `prod p'(q) = e^{-b} prod p(q)`.
//!
//! Agreement can be demanded of the physical corrections (accept iff the
//! re-decode reproduces the correction bit for bit) or of their logical
//! classes across `k` rounds, with the priors reweighted cumulatively by
//! every round's output.

use thiserror::Error;

use crate::decoders::{Correction, DecodeError, Decoder, Priors};
use crate::error_model::SparseBinaryMatrix;

/// Probabilities are floored near the bottom of the f64 range instead of
/// underflowing to zero; hitting the floor is counted as a clamp event.
pub const PROBABILITY_FLOOR_LN: f64 = -690.77552789821368; // ln(1e-300)

#[derive(Debug, Error, PartialEq)]
pub enum ReweightingError {
    #[error("ratio rule requires b >= 1, got {0}")]
    RatioParameter(f64),
    #[error("gap rule requires b > 0, got {0}")]
    GapParameter(f64),
    #[error("logical-error criterion requires at least 2 rounds, got {0}")]
    CriterionRounds(u32),
    #[error("the physical-error criterion requires a deterministic decoder")]
    NondeterministicPec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReweightVariant {
    Ratio,
    Gap,
}

/// Suppression rule with its strength parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReweightRule {
    pub variant: ReweightVariant,
    pub b: f64,
}

impl ReweightRule {
    /// Ratio rule, `b >= 1`; `b = 1` is the explicit identity.
    pub fn ratio(b: f64) -> Result<Self, ReweightingError> {
        if !(b >= 1.0) {
            return Err(ReweightingError::RatioParameter(b));
        }
        Ok(Self {
            variant: ReweightVariant::Ratio,
            b,
        })
    }

    /// Gap rule, `b > 0`.
    pub fn gap(b: f64) -> Result<Self, ReweightingError> {
        if !(b > 0.0) {
            return Err(ReweightingError::GapParameter(b));
        }
        Ok(Self {
            variant: ReweightVariant::Gap,
            b,
        })
    }

    pub fn apply(&self, priors: &Priors, correction: &Correction) -> Reweighted {
        match self.variant {
            ReweightVariant::Ratio => reweight_ratio(priors, correction, self.b),
            ReweightVariant::Gap => reweight_gap(priors, correction, self.b),
        }
    }
}

/// Reweighted priors plus the number of entries clamped at the probability
/// floor.
#[derive(Debug, Clone)]
pub struct Reweighted {
    pub priors: Priors,
    pub clamp_events: u64,
}

/// Ratio suppression: `p'(q) = p(q)^b` for mechanisms in the correction,
/// unchanged otherwise.
pub fn reweight_ratio(priors: &Priors, correction: &Correction, b: f64) -> Reweighted {
    debug_assert_eq!(priors.len(), correction.len());
    if b == 1.0 {
        return Reweighted {
            priors: priors.clone(),
            clamp_events: 0,
        };
    }
    let mut values = priors.to_vec();
    let mut clamp_events = 0;
    for q in correction.support() {
        let ln_p = b * values[q].ln();
        if ln_p < PROBABILITY_FLOOR_LN {
            values[q] = PROBABILITY_FLOOR_LN.exp();
            clamp_events += 1;
        } else {
            values[q] = ln_p.exp();
        }
    }
    Reweighted {
        priors: Priors::from_raw(values),
        clamp_events,
    }
}

/// Gap suppression: each mechanism in the correction is scaled by
/// `exp(-b ln p(q) / ln p(c))` where `p(c)` is the correction's prior
/// product, so the penalties multiply to exactly `e^{-b}`.
pub fn reweight_gap(priors: &Priors, correction: &Correction, b: f64) -> Reweighted {
    debug_assert_eq!(priors.len(), correction.len());
    let ln_pc: f64 = correction.support().map(|q| priors[q].ln()).sum();
    if ln_pc == 0.0 {
        // Empty correction: nothing to suppress.
        return Reweighted {
            priors: priors.clone(),
            clamp_events: 0,
        };
    }
    let mut values = priors.to_vec();
    let mut clamp_events = 0;
    for q in correction.support() {
        let ln_p = values[q].ln();
        let suppressed = ln_p - b * ln_p / ln_pc;
        if suppressed < PROBABILITY_FLOOR_LN {
            values[q] = PROBABILITY_FLOOR_LN.exp();
            clamp_events += 1;
        } else {
            values[q] = suppressed.exp();
        }
    }
    Reweighted {
        priors: Priors::from_raw(values),
        clamp_events,
    }
}

/// Acceptance criterion: physical corrections must coincide, or the logical
/// classes of `k` decoding rounds must coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Pec,
    Lec { rounds: u32 },
}

impl Criterion {
    pub fn lec(rounds: u32) -> Result<Self, ReweightingError> {
        if rounds < 2 {
            return Err(ReweightingError::CriterionRounds(rounds));
        }
        Ok(Self::Lec { rounds })
    }

    /// Total decoding rounds including the first.
    pub fn total_rounds(&self) -> u32 {
        match self {
            Self::Pec => 2,
            Self::Lec { rounds } => *rounds,
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Pec => write!(f, "PEC"),
            Self::Lec { rounds } => write!(f, "{rounds}R-LEC"),
        }
    }
}

/// Why a shot was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    /// A re-decode disagreed with the first round at this decoding round
    /// (1-based).
    Mismatch { round: u32 },
    /// The decoder failed at this round; counted as a rejection.
    Decoder { round: u32, error: DecodeError },
}

/// Outcome of post-selecting one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub accepted: bool,
    /// The committed (first-round) correction, present iff accepted.
    pub correction: Option<Correction>,
    /// Decoding rounds actually performed.
    pub rounds_used: u32,
    /// Every round's correction, for diagnostics.
    pub round_corrections: Vec<Correction>,
    pub clamp_events: u64,
    pub rejection: Option<Rejection>,
}

/// Lean per-shot outcome: [`Verdict`] without the correction diagnostics,
/// suitable for high-shot-count loops.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelection {
    pub accepted: bool,
    pub rounds_used: u32,
    pub clamp_events: u64,
    pub rejection: Option<Rejection>,
}

fn logical_class(observables: &SparseBinaryMatrix, correction: &Correction) -> Vec<bool> {
    let mut class = vec![false; observables.rows()];
    for q in correction.support() {
        for &o in observables.column(q) {
            class[o as usize] ^= true;
        }
    }
    class
}

/// Core multi-round loop shared by the public entry points and by windowed
/// decoding. `reweight_mask`, when present, restricts suppression to the
/// flagged mechanisms (corrections are masked before reweighting). The
/// callback sees each re-decode round's correction.
pub(crate) fn run_post_selection(
    decoder: &mut dyn Decoder,
    priors: &Priors,
    syndrome: &[bool],
    observables: &SparseBinaryMatrix,
    criterion: Criterion,
    rule: &ReweightRule,
    first: &Correction,
    reweight_mask: Option<&[bool]>,
    mut on_round: impl FnMut(&Correction),
) -> Result<PostSelection, ReweightingError> {
    if criterion == Criterion::Pec && !decoder.is_deterministic() {
        return Err(ReweightingError::NondeterministicPec);
    }
    if let Criterion::Lec { rounds } = criterion {
        if rounds < 2 {
            return Err(ReweightingError::CriterionRounds(rounds));
        }
    }
    let first_class = logical_class(observables, first);
    let masked = |c: &Correction| -> Correction {
        match reweight_mask {
            None => c.clone(),
            Some(mask) => Correction(
                c.0.iter()
                    .zip(mask)
                    .map(|(&bit, &allowed)| bit && allowed)
                    .collect(),
            ),
        }
    };

    let mut clamp_events = 0;
    let Reweighted {
        priors: mut current,
        clamp_events: clamps,
    } = rule.apply(priors, &masked(first));
    clamp_events += clamps;

    let total_rounds = criterion.total_rounds();
    for round in 2..=total_rounds {
        let redecoded = match decoder.decode(&current, syndrome) {
            Ok(c) => c,
            Err(error) => {
                return Ok(PostSelection {
                    accepted: false,
                    rounds_used: round,
                    clamp_events,
                    rejection: Some(Rejection::Decoder { round, error }),
                })
            }
        };
        on_round(&redecoded);
        let agrees = match criterion {
            Criterion::Pec => redecoded == *first,
            Criterion::Lec { .. } => logical_class(observables, &redecoded) == first_class,
        };
        if !agrees {
            return Ok(PostSelection {
                accepted: false,
                rounds_used: round,
                clamp_events,
                rejection: Some(Rejection::Mismatch { round }),
            });
        }
        if round < total_rounds {
            let Reweighted {
                priors: next,
                clamp_events: clamps,
            } = rule.apply(&current, &masked(&redecoded));
            current = next;
            clamp_events += clamps;
        }
    }
    Ok(PostSelection {
        accepted: true,
        rounds_used: total_rounds,
        clamp_events,
        rejection: None,
    })
}

/// Re-decode rounds for a non-empty first-round correction, without verdict
/// diagnostics. The caller is responsible for the empty-correction early
/// accept.
pub fn post_select_with_first(
    decoder: &mut dyn Decoder,
    priors: &Priors,
    syndrome: &[bool],
    observables: &SparseBinaryMatrix,
    criterion: Criterion,
    rule: &ReweightRule,
    first: &Correction,
) -> Result<PostSelection, ReweightingError> {
    run_post_selection(
        decoder,
        priors,
        syndrome,
        observables,
        criterion,
        rule,
        first,
        None,
        |_| {},
    )
}

/// Runs the re-decode rounds for a first-round correction and reports whether
/// the shot passes the criterion.
pub fn post_select(
    decoder: &mut dyn Decoder,
    priors: &Priors,
    syndrome: &[bool],
    observables: &SparseBinaryMatrix,
    criterion: Criterion,
    rule: &ReweightRule,
    first: &Correction,
) -> Result<bool, ReweightingError> {
    let outcome = run_post_selection(
        decoder,
        priors,
        syndrome,
        observables,
        criterion,
        rule,
        first,
        None,
        |_| {},
    )?;
    Ok(outcome.accepted)
}

/// Full post-selection decode of one shot: decode, accept immediately on an
/// empty correction, otherwise re-decode under reweighted priors and apply
/// the criterion.
pub fn argument_reweighting(
    decoder: &mut dyn Decoder,
    priors: &Priors,
    syndrome: &[bool],
    observables: &SparseBinaryMatrix,
    criterion: Criterion,
    rule: &ReweightRule,
) -> Result<Verdict, ReweightingError> {
    let first = match decoder.decode(priors, syndrome) {
        Ok(c) => c,
        Err(error) => {
            return Ok(Verdict {
                accepted: false,
                correction: None,
                rounds_used: 1,
                round_corrections: Vec::new(),
                clamp_events: 0,
                rejection: Some(Rejection::Decoder { round: 1, error }),
            })
        }
    };
    argument_reweighting_with_first(decoder, priors, syndrome, observables, criterion, rule, first)
}

/// [`argument_reweighting`] with the first-round correction supplied by the
/// caller (the harness decodes each shot once and shares the result across a
/// sweep). The caller must have produced `first` from these priors and this
/// syndrome.
pub fn argument_reweighting_with_first(
    decoder: &mut dyn Decoder,
    priors: &Priors,
    syndrome: &[bool],
    observables: &SparseBinaryMatrix,
    criterion: Criterion,
    rule: &ReweightRule,
    first: Correction,
) -> Result<Verdict, ReweightingError> {
    let mut round_corrections = vec![first.clone()];
    if first.is_empty() {
        // No error detected: accepted by default.
        return Ok(Verdict {
            accepted: true,
            correction: Some(first),
            rounds_used: 1,
            round_corrections,
            clamp_events: 0,
            rejection: None,
        });
    }
    let outcome = run_post_selection(
        decoder,
        priors,
        syndrome,
        observables,
        criterion,
        rule,
        &first,
        None,
        |c| round_corrections.push(c.clone()),
    )?;
    Ok(Verdict {
        accepted: outcome.accepted,
        correction: outcome.accepted.then_some(first),
        rounds_used: outcome.rounds_used,
        round_corrections,
        clamp_events: outcome.clamp_events,
        rejection: outcome.rejection,
    })
}
