//! Maximum-likelihood-type decoders behind a common contract.
//!
//! A decoder maps `(priors, syndrome)` to a correction whose syndrome equals
//! the input; the priors are passed per call because multi-round
//! post-selection re-decodes under modified error models. Three
//! implementations are provided: min-sum belief propagation with an
//! ordered-statistics fallback, exact minimum-weight perfect matching on a
//! decoding graph, and exhaustive maximum-likelihood search.

mod bp;
mod exact;
mod mwpm;
mod osd;

use std::ops::Deref;

use thiserror::Error;

use crate::error_model::DetectorErrorModel;

pub use bp::{decode_bp, decode_bp_osd, BpConfig, BpOsdDecoder, BpOutcome};
pub use exact::{
    decode_ml_bruteforce, log_probability, ExactMlDecoder, MlSolution, SpectrumEntry,
    BRUTE_FORCE_CAP,
};
pub use mwpm::{build_matching_graph, decode_mwpm, edge_weight, MatchingGraph, MwpmConfig, MwpmDecoder};
pub use osd::decode_osd0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DecodeError {
    #[error("syndrome is not in the column space of the check matrix")]
    Unsolvable,
    #[error("syndrome too dense: {triggered} triggered detectors exceed the exact-matching cap {cap}")]
    SyndromeTooDense { triggered: usize, cap: usize },
    #[error("mechanism {mechanism} triggers {detectors} detectors; matching requires 1 or 2")]
    NotMatchable { mechanism: usize, detectors: usize },
    #[error("model has {count} mechanisms; exhaustive decoding caps at {cap}")]
    TooManyMechanisms { count: usize, cap: usize },
    #[error("prior probability {value} outside {range}")]
    InvalidPrior { value: f64, range: &'static str },
    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(String),
    #[error("vector length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Per-mechanism prior probabilities, in mechanism order.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors(Vec<f64>);

impl Priors {
    pub fn new(values: Vec<f64>) -> Result<Self, DecodeError> {
        for &p in &values {
            if !(p > 0.0 && p < 1.0) {
                return Err(DecodeError::InvalidPrior {
                    value: p,
                    range: "(0, 1)",
                });
            }
        }
        Ok(Self(values))
    }

    /// Skips range validation; reserved for reweighting, which only moves
    /// probabilities within (0, 1).
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn from_model(model: &DetectorErrorModel) -> Self {
        Self(model.prior_probabilities())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Priors {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Decoder output: the subset of mechanisms chosen to explain a syndrome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Correction(pub Vec<bool>);

impl Correction {
    pub fn empty(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &q in support {
            bits[q] = true;
        }
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Indices of the mechanisms in the correction, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(q, &b)| b.then_some(q))
    }
}

/// The pluggable decoder contract.
///
/// Implementations may keep per-decode scratch state, so one instance must
/// not be shared between concurrent decodes; construct one per worker from
/// the shared model.
pub trait Decoder {
    fn decode(&mut self, priors: &Priors, syndrome: &[bool]) -> Result<Correction, DecodeError>;

    /// Whether identical inputs always produce identical outputs. The
    /// physical-error acceptance criterion is only well-defined for
    /// deterministic decoders.
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Buildable description of a decoder, used wherever fresh instances are
/// needed per worker or per decoding window.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderKind {
    BpOsd(BpConfig),
    Mwpm(MwpmConfig),
    ExactMl,
}

impl DecoderKind {
    /// Validates decoder/model compatibility and constructs an instance.
    pub fn build(&self, model: &DetectorErrorModel) -> Result<Box<dyn Decoder + Send>, DecodeError> {
        match self {
            Self::BpOsd(config) => Ok(Box::new(BpOsdDecoder::new(model, config.clone())?)),
            Self::Mwpm(config) => Ok(Box::new(MwpmDecoder::new(model, config.clone())?)),
            Self::ExactMl => Ok(Box::new(ExactMlDecoder::new(model)?)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BpOsd(_) => "bp-osd",
            Self::Mwpm(_) => "mwpm",
            Self::ExactMl => "exact-ml",
        }
    }
}
