//! Exhaustive maximum-likelihood decoding for small models: enumerate every
//! error configuration, keep the most probable one consistent with the
//! syndrome, and report per-class likelihoods plus the full probability
//! spectrum of consistent configurations.

use std::collections::BTreeMap;

use crate::error_model::DetectorErrorModel;

use super::{Correction, DecodeError, Decoder, Priors};

/// Exhaustive decoding enumerates 2^m configurations; refuse anything wider.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Log-probability of an error configuration under independent mechanism
/// priors, accumulated in mechanism order so equal configurations always
/// produce bitwise-identical values.
pub fn log_probability(priors: &Priors, bits: &[bool]) -> f64 {
    debug_assert_eq!(priors.len(), bits.len());
    let mut total = 0.0;
    for (&p, &bit) in priors.iter().zip(bits) {
        total += if bit { p.ln() } else { (1.0 - p).ln() };
    }
    total
}

/// One consistent error configuration in the spectrum, stored as a mechanism
/// bit mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub mask: u32,
    pub probability: f64,
    pub log_probability: f64,
}

impl SpectrumEntry {
    pub fn error_bits(&self, num_mechanisms: usize) -> Vec<bool> {
        (0..num_mechanisms).map(|q| self.mask >> q & 1 == 1).collect()
    }
}

/// Output of exhaustive decoding.
#[derive(Debug, Clone)]
pub struct MlSolution {
    /// A most probable consistent configuration; exact ties break toward the
    /// lexicographically smallest bit vector.
    pub correction: Correction,
    /// Total probability of the consistent configurations in each logical
    /// class.
    pub class_likelihoods: BTreeMap<Vec<bool>, f64>,
    /// All consistent configurations by decreasing probability.
    pub spectrum: Vec<SpectrumEntry>,
    /// Total probability of observing the syndrome.
    pub pr_syndrome: f64,
}

// Lexicographic comparison of bit vectors encoded as masks: bit 0 first,
// 0 before 1.
fn lex_less(a: u32, b: u32) -> bool {
    if a == b {
        return false;
    }
    let first_diff = (a ^ b).trailing_zeros();
    a >> first_diff & 1 == 0
}

fn detector_words(model: &DetectorErrorModel) -> (usize, Vec<Vec<u64>>) {
    let words = model.num_detectors().div_ceil(64).max(1);
    let masks = model
        .mechanisms()
        .iter()
        .map(|mech| {
            let mut w = vec![0u64; words];
            for &d in &mech.detectors {
                w[d as usize / 64] |= 1 << (d % 64);
            }
            w
        })
        .collect();
    (words, masks)
}

fn syndrome_words(syndrome: &[bool], words: usize) -> Vec<u64> {
    let mut w = vec![0u64; words];
    for (d, &bit) in syndrome.iter().enumerate() {
        if bit {
            w[d / 64] |= 1 << (d % 64);
        }
    }
    w
}

fn check_cap(model: &DetectorErrorModel) -> Result<(), DecodeError> {
    if model.num_mechanisms() > BRUTE_FORCE_CAP {
        return Err(DecodeError::TooManyMechanisms {
            count: model.num_mechanisms(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    Ok(())
}

/// Enumerates every error configuration of the model and returns the
/// maximum-likelihood correction for the syndrome together with class
/// likelihoods and the spectrum. Uses the model's own priors.
pub fn decode_ml_bruteforce(
    model: &DetectorErrorModel,
    syndrome: &[bool],
) -> Result<MlSolution, DecodeError> {
    check_cap(model)?;
    if syndrome.len() != model.num_detectors() {
        return Err(DecodeError::LengthMismatch {
            expected: model.num_detectors(),
            got: syndrome.len(),
        });
    }
    let m = model.num_mechanisms();
    let priors = Priors::from_model(model);
    let (words, det_words) = detector_words(model);
    let target = syndrome_words(syndrome, words);
    let obs_masks: Vec<u64> = model
        .mechanisms()
        .iter()
        .map(|mech| mech.observables.iter().fold(0u64, |acc, &o| acc | 1 << o))
        .collect();

    let ln_terms: Vec<(f64, f64)> = priors.iter().map(|&p| (p.ln(), (1.0 - p).ln())).collect();
    let mut spectrum = Vec::new();
    let mut classes: BTreeMap<u64, f64> = BTreeMap::new();
    let mut pr_syndrome = 0.0;
    let mut best: Option<(f64, u32, u64)> = None;
    let mut scratch = vec![0u64; words];
    for mask in 0u32..1u32 << m {
        scratch.fill(0);
        let mut logp = 0.0;
        let mut obs = 0u64;
        for (q, terms) in ln_terms.iter().enumerate() {
            if mask >> q & 1 == 1 {
                logp += terms.0;
                for (w, &d) in scratch.iter_mut().zip(&det_words[q]) {
                    *w ^= d;
                }
                obs ^= obs_masks[q];
            } else {
                logp += terms.1;
            }
        }
        if scratch != target {
            continue;
        }
        let probability = logp.exp();
        pr_syndrome += probability;
        *classes.entry(obs).or_insert(0.0) += probability;
        spectrum.push(SpectrumEntry {
            mask,
            probability,
            log_probability: logp,
        });
        let better = match best {
            None => true,
            Some((best_logp, best_mask, _)) => {
                logp > best_logp || (logp == best_logp && lex_less(mask, best_mask))
            }
        };
        if better {
            best = Some((logp, mask, obs));
        }
    }
    let Some((_, best_mask, _)) = best else {
        return Err(DecodeError::Unsolvable);
    };
    spectrum.sort_by(|a, b| {
        b.log_probability
            .total_cmp(&a.log_probability)
            .then_with(|| if lex_less(a.mask, b.mask) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            })
    });
    debug_assert_eq!(spectrum[0].mask, best_mask);
    let to_bits = |obs: u64| -> Vec<bool> {
        (0..model.num_observables()).map(|o| obs >> o & 1 == 1).collect()
    };
    let class_likelihoods = classes
        .into_iter()
        .map(|(obs, p)| (to_bits(obs), p))
        .collect();
    let correction = Correction((0..m).map(|q| best_mask >> q & 1 == 1).collect());
    Ok(MlSolution {
        correction,
        class_likelihoods,
        spectrum,
        pr_syndrome,
    })
}

/// Exhaustive decoder behind the common contract. Unlike
/// [`decode_ml_bruteforce`] it maximizes under the priors supplied per call,
/// which is what reweighted decoding rounds need.
pub struct ExactMlDecoder {
    det_words: Vec<Vec<u64>>,
    words: usize,
    num_detectors: usize,
}

impl ExactMlDecoder {
    pub fn new(model: &DetectorErrorModel) -> Result<Self, DecodeError> {
        check_cap(model)?;
        let (words, det_words) = detector_words(model);
        Ok(Self {
            det_words,
            words,
            num_detectors: model.num_detectors(),
        })
    }
}

impl Decoder for ExactMlDecoder {
    fn decode(&mut self, priors: &Priors, syndrome: &[bool]) -> Result<Correction, DecodeError> {
        let m = self.det_words.len();
        if priors.len() != m {
            return Err(DecodeError::LengthMismatch {
                expected: m,
                got: priors.len(),
            });
        }
        if syndrome.len() != self.num_detectors {
            return Err(DecodeError::LengthMismatch {
                expected: self.num_detectors,
                got: syndrome.len(),
            });
        }
        let target = syndrome_words(syndrome, self.words);
        let ln_terms: Vec<(f64, f64)> =
            priors.iter().map(|&p| (p.ln(), (1.0 - p).ln())).collect();
        let mut best: Option<(f64, u32)> = None;
        let mut scratch = vec![0u64; self.words];
        for mask in 0u32..1u32 << m {
            scratch.fill(0);
            let mut logp = 0.0;
            for (q, terms) in ln_terms.iter().enumerate() {
                if mask >> q & 1 == 1 {
                    logp += terms.0;
                    for (w, &d) in scratch.iter_mut().zip(&self.det_words[q]) {
                        *w ^= d;
                    }
                } else {
                    logp += terms.1;
                }
            }
            if scratch != target {
                continue;
            }
            let better = match best {
                None => true,
                Some((best_logp, best_mask)) => {
                    logp > best_logp || (logp == best_logp && lex_less(mask, best_mask))
                }
            };
            if better {
                best = Some((logp, mask));
            }
        }
        let Some((_, mask)) = best else {
            return Err(DecodeError::Unsolvable);
        };
        Ok(Correction((0..m).map(|q| mask >> q & 1 == 1).collect()))
    }
}
