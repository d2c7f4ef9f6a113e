//! Post-selection decoding toolkit for detector error models.
//!
//! The toolkit samples errors from a detector error model, decodes them with
//! maximum-likelihood-type decoders, re-decodes under reweighted error models
//! that suppress the previous correction, and accepts or rejects each shot by
//! comparing the rounds. Accepting only stable outcomes trades a rejection
//! rate for a lower logical error rate.
//!
//! Modules:
//! - [`error_model`]: detector error models, phenomenological code builders,
//!   check/observable matrices.
//! - [`dem`]: the text format for models.
//! - [`sampler`]: reproducible counter-seeded Monte Carlo sampling.
//! - [`decoders`]: the decoder contract plus BP+OSD, exact matching, and an
//!   exhaustive maximum-likelihood oracle.
//! - [`reweighting`]: suppression rules, acceptance criteria, and the
//!   multi-round accept/reject procedure.
//! - [`windowing`]: sliding-window decoding with commit and buffer regions.
//! - [`metrics`]: rate estimates, baselines, and conditional-rate bounds.

pub mod decoders;
pub mod dem;
pub mod error_model;
pub mod metrics;
pub mod reweighting;
pub mod sampler;
pub mod windowing;

pub use decoders::{
    BpConfig, Correction, DecodeError, Decoder, DecoderKind, MwpmConfig, Priors,
};
pub use dem::{parse_dem, serialize_dem, DemParseError};
pub use error_model::{
    build_repetition_code, build_surface_code_phenomenological, DetectorErrorModel,
    ErrorMechanism, ModelError, SparseBinaryMatrix,
};
pub use metrics::{estimate_rates, RateEstimate, ShotOutcome};
pub use reweighting::{
    argument_reweighting, Criterion, ReweightRule, ReweightVariant, ReweightingError, Verdict,
};
pub use sampler::{sample_shot, Shot};
pub use windowing::{ReweightScope, SlidingWindowDecoder, WindowLayout, WindowVerdict};
