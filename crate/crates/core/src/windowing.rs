//! Sliding-window decoding with per-window post-selection.
//!
//! A window spans `n_com + n_buf` measurement rounds. Its front `n_com`
//! rounds form the commit region: the window is decoded (with reweighted
//! re-decodes and the acceptance criterion applied per window), the
//! commit-region part of its correction is finalized, and the window slides
//! forward by `n_com` rounds. Buffer-region corrections are discarded and
//! re-decoded by later windows. A window whose span reaches the end of the
//! experiment is the last one and is committed in full, so an experiment no
//! longer than one window degenerates to global decoding.

use thiserror::Error;

use crate::decoders::{Correction, DecodeError, DecoderKind, Priors};
use crate::error_model::{DetectorErrorModel, SparseBinaryMatrix};
use crate::reweighting::{run_post_selection, Criterion, Rejection, ReweightRule, ReweightingError};

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("mechanism {0} carries no round tag; windowing requires tagged mechanisms")]
    UntaggedMechanism(usize),
    #[error("mechanism {mechanism} is tagged round {round}, outside the layout's {total_rounds} rounds")]
    RoundOutOfRange {
        mechanism: usize,
        round: u32,
        total_rounds: u32,
    },
    #[error("window index {index} out of range: window starts must stay below {total_rounds} rounds")]
    WindowOutOfRange { index: usize, total_rounds: u32 },
    #[error("invalid window layout: {0}")]
    InvalidLayout(String),
    #[error("decoder construction failed for window {window}: {error}")]
    Decoder { window: usize, error: DecodeError },
    #[error(transparent)]
    Reweighting(#[from] ReweightingError),
}

/// Which mechanisms of a window's first-round correction get reweighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReweightScope {
    /// Suppress every window mechanism in the correction.
    FullWindow,
    /// Suppress only correction mechanisms tagged inside the commit region.
    CommitOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowLayout {
    pub n_com: u32,
    pub n_buf: u32,
    pub total_rounds: u32,
    pub scope: ReweightScope,
}

impl WindowLayout {
    pub fn new(
        n_com: u32,
        n_buf: u32,
        total_rounds: u32,
        scope: ReweightScope,
    ) -> Result<Self, WindowError> {
        if n_com < 1 {
            return Err(WindowError::InvalidLayout("n_com must be >= 1".into()));
        }
        if total_rounds < 1 {
            return Err(WindowError::InvalidLayout(
                "total_rounds must be >= 1".into(),
            ));
        }
        Ok(Self {
            n_com,
            n_buf,
            total_rounds,
            scope,
        })
    }

    /// Round range `[start, end)` covered by window `index`, its commit
    /// boundary, and whether it is the final window. The final window is the
    /// first whose span reaches `total_rounds`; it commits everything.
    pub fn window_bounds(&self, index: usize) -> Result<WindowBounds, WindowError> {
        let start = index as u64 * self.n_com as u64;
        if start >= self.total_rounds as u64 {
            return Err(WindowError::WindowOutOfRange {
                index,
                total_rounds: self.total_rounds,
            });
        }
        let start = start as u32;
        let span_end = start.saturating_add(self.n_com).saturating_add(self.n_buf);
        let is_final = span_end >= self.total_rounds;
        let end = span_end.min(self.total_rounds);
        let commit_end = if is_final {
            end
        } else {
            start + self.n_com
        };
        Ok(WindowBounds {
            start,
            end,
            commit_end,
            is_final,
        })
    }

    /// Number of windows a decode pass visits.
    pub fn num_windows(&self) -> usize {
        let mut index = 0;
        loop {
            match self.window_bounds(index) {
                Ok(bounds) if !bounds.is_final => index += 1,
                _ => return index + 1,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowBounds {
    pub start: u32,
    pub end: u32,
    pub commit_end: u32,
    pub is_final: bool,
}

/// A window's sub-model with maps back to the parent model.
#[derive(Debug, Clone)]
pub struct WindowSlice {
    pub model: DetectorErrorModel,
    /// Parent detector index of each local detector.
    pub detector_map: Vec<u32>,
    /// Parent mechanism index of each local mechanism.
    pub mechanism_map: Vec<u32>,
    pub bounds: WindowBounds,
}

/// Extracts the sub-model of one window: the mechanisms whose round tag lies
/// in the window's span, over the detectors they reference (boundary
/// detectors shared with previously committed rounds included). Mechanism
/// order, round tags, and observable indices are preserved from the parent.
pub fn window_slice(
    model: &DetectorErrorModel,
    layout: &WindowLayout,
    index: usize,
) -> Result<WindowSlice, WindowError> {
    let bounds = layout.window_bounds(index)?;
    let mut mechanism_map = Vec::new();
    let mut detector_set = std::collections::BTreeSet::new();
    for (q, mech) in model.mechanisms().iter().enumerate() {
        let round = match mech.round {
            Some(r) => r,
            None => return Err(WindowError::UntaggedMechanism(q)),
        };
        if round >= layout.total_rounds {
            return Err(WindowError::RoundOutOfRange {
                mechanism: q,
                round,
                total_rounds: layout.total_rounds,
            });
        }
        if round >= bounds.start && round < bounds.end {
            mechanism_map.push(q as u32);
            detector_set.extend(mech.detectors.iter().copied());
        }
    }
    let detector_map: Vec<u32> = detector_set.into_iter().collect();
    let local_of: std::collections::BTreeMap<u32, u32> = detector_map
        .iter()
        .enumerate()
        .map(|(local, &parent)| (parent, local as u32))
        .collect();
    let mechanisms = mechanism_map
        .iter()
        .map(|&q| {
            let mech = &model.mechanisms()[q as usize];
            let mut local = mech.clone();
            local.detectors = mech.detectors.iter().map(|d| local_of[d]).collect();
            local
        })
        .collect();
    let sub_model =
        DetectorErrorModel::new(mechanisms, detector_map.len(), model.num_observables())
            .expect("local indices are dense");
    Ok(WindowSlice {
        model: sub_model,
        detector_map,
        mechanism_map,
        bounds,
    })
}

struct PlannedWindow {
    slice: WindowSlice,
    decoder: Box<dyn crate::decoders::Decoder + Send>,
    priors: Priors,
    observables: SparseBinaryMatrix,
    /// Local mechanisms inside the commit region.
    commit_mask: Vec<bool>,
    /// Reweight eligibility per local mechanism, per the layout's scope.
    reweight_mask: Option<Vec<bool>>,
}

/// Sliding-window decoder: plans every window of a layout once (sub-models,
/// decoder instances, masks) and then decodes shots against the plan.
pub struct SlidingWindowDecoder {
    windows: Vec<PlannedWindow>,
    num_mechanisms: usize,
    num_detectors: usize,
}

/// Lean windowed outcome without the committed correction.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPostSelection {
    pub accepted: bool,
    pub windows_used: usize,
    pub clamp_events: u64,
    pub rejection: Option<(usize, Rejection)>,
}

/// Outcome of post-selected window decoding for one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowVerdict {
    pub accepted: bool,
    /// Committed correction over parent mechanisms, present iff accepted.
    pub committed: Option<Correction>,
    /// Windows decoded before acceptance or the first rejection.
    pub windows_used: usize,
    pub clamp_events: u64,
    /// The rejecting window and its reason, present iff rejected.
    pub rejection: Option<(usize, Rejection)>,
}

/// First-round decode of every window with commit bookkeeping but no
/// post-selection; reused as the baseline path and as the shared first
/// rounds of a sweep.
#[derive(Debug, Clone)]
pub struct WindowFirstPass {
    /// Per window: the local residual syndrome it saw and its first-round
    /// correction.
    rounds: Vec<(Vec<bool>, Correction)>,
    pub committed: Correction,
    /// Window index and error of the first failing decode, if any.
    pub failure: Option<(usize, DecodeError)>,
}

impl SlidingWindowDecoder {
    pub fn new(
        model: &DetectorErrorModel,
        layout: &WindowLayout,
        decoder: &DecoderKind,
    ) -> Result<Self, WindowError> {
        let mut windows = Vec::new();
        for index in 0..layout.num_windows() {
            let slice = window_slice(model, layout, index)?;
            let instance = decoder
                .build(&slice.model)
                .map_err(|error| WindowError::Decoder {
                    window: index,
                    error,
                })?;
            let priors = Priors::from_model(&slice.model);
            let observables = slice.model.observable_matrix();
            let commit_mask: Vec<bool> = slice
                .model
                .mechanisms()
                .iter()
                .map(|m| m.round.expect("slice mechanisms are tagged") < slice.bounds.commit_end)
                .collect();
            let reweight_mask = match layout.scope {
                ReweightScope::FullWindow => None,
                ReweightScope::CommitOnly => Some(commit_mask.clone()),
            };
            windows.push(PlannedWindow {
                slice,
                decoder: instance,
                priors,
                observables,
                commit_mask,
                reweight_mask,
            });
        }
        Ok(Self {
            windows,
            num_mechanisms: model.num_mechanisms(),
            num_detectors: model.num_detectors(),
        })
    }

    pub fn num_windows(&self) -> usize {
        self.windows.len()
    }

    /// Decodes every window once, committing first-round corrections and
    /// propagating the residual syndrome. This is plain sliding-window
    /// decoding without post-selection.
    pub fn first_pass(&mut self, syndrome: &[bool]) -> WindowFirstPass {
        debug_assert_eq!(syndrome.len(), self.num_detectors);
        let mut residual = syndrome.to_vec();
        let mut committed = Correction::empty(self.num_mechanisms);
        let mut rounds = Vec::with_capacity(self.windows.len());
        for (index, window) in self.windows.iter_mut().enumerate() {
            let local_syndrome: Vec<bool> = window
                .slice
                .detector_map
                .iter()
                .map(|&d| residual[d as usize])
                .collect();
            let correction = match window.decoder.decode(&window.priors, &local_syndrome) {
                Ok(c) => c,
                Err(error) => {
                    return WindowFirstPass {
                        rounds,
                        committed,
                        failure: Some((index, error)),
                    }
                }
            };
            for (local, parent) in window.slice.mechanism_map.iter().enumerate() {
                if correction.0[local] && window.commit_mask[local] {
                    committed.0[*parent as usize] = true;
                    for &d in &window.slice.model.mechanisms()[local].detectors {
                        let parent_detector = window.slice.detector_map[d as usize];
                        residual[parent_detector as usize] ^= true;
                    }
                }
            }
            rounds.push((local_syndrome, correction));
        }
        debug_assert!(
            residual.iter().all(|&b| !b),
            "windowed commits left residual syndrome"
        );
        rounds.shrink_to_fit();
        WindowFirstPass {
            rounds,
            committed,
            failure: None,
        }
    }

    /// Per-window post-selection on top of a first pass, stopping at the
    /// first rejecting window; lean form without the committed correction
    /// (which is always the first pass's commit).
    pub fn evaluate_pass(
        &mut self,
        pass: &WindowFirstPass,
        criterion: Criterion,
        rule: &ReweightRule,
    ) -> Result<WindowPostSelection, ReweightingError> {
        let mut clamp_events = 0;
        for (index, (local_syndrome, first)) in pass.rounds.iter().enumerate() {
            let window = &mut self.windows[index];
            if first.is_empty() {
                continue;
            }
            let outcome = run_post_selection(
                window.decoder.as_mut(),
                &window.priors,
                local_syndrome,
                &window.observables,
                criterion,
                rule,
                first,
                window.reweight_mask.as_deref(),
                |_| {},
            )?;
            clamp_events += outcome.clamp_events;
            if !outcome.accepted {
                return Ok(WindowPostSelection {
                    accepted: false,
                    windows_used: index + 1,
                    clamp_events,
                    rejection: outcome.rejection.map(|r| (index, r)),
                });
            }
        }
        if let Some((index, error)) = &pass.failure {
            return Ok(WindowPostSelection {
                accepted: false,
                windows_used: index + 1,
                clamp_events,
                rejection: Some((
                    *index,
                    Rejection::Decoder {
                        round: 1,
                        error: error.clone(),
                    },
                )),
            });
        }
        Ok(WindowPostSelection {
            accepted: true,
            windows_used: pass.rounds.len(),
            clamp_events,
            rejection: None,
        })
    }

    /// Applies per-window post-selection on top of a first pass, returning
    /// the full verdict.
    pub fn post_select_pass(
        &mut self,
        pass: &WindowFirstPass,
        criterion: Criterion,
        rule: &ReweightRule,
    ) -> Result<WindowVerdict, ReweightingError> {
        let lean = self.evaluate_pass(pass, criterion, rule)?;
        Ok(WindowVerdict {
            accepted: lean.accepted,
            committed: lean.accepted.then(|| pass.committed.clone()),
            windows_used: lean.windows_used,
            clamp_events: lean.clamp_events,
            rejection: lean.rejection,
        })
    }

    /// Full post-selected decode of one shot.
    pub fn decode(
        &mut self,
        syndrome: &[bool],
        criterion: Criterion,
        rule: &ReweightRule,
    ) -> Result<WindowVerdict, ReweightingError> {
        let pass = self.first_pass(syndrome);
        self.post_select_pass(&pass, criterion, rule)
    }
}

/// Convenience entry point: plans the layout and decodes one shot.
pub fn decode_sliding_window(
    model: &DetectorErrorModel,
    layout: &WindowLayout,
    decoder: &DecoderKind,
    criterion: Criterion,
    rule: &ReweightRule,
    syndrome: &[bool],
) -> Result<WindowVerdict, WindowError> {
    let mut planned = SlidingWindowDecoder::new(model, layout, decoder)?;
    Ok(planned.decode(syndrome, criterion, rule)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::{BpConfig, MwpmConfig};
    use crate::error_model::build_repetition_code;
    use crate::reweighting::argument_reweighting;
    use crate::sampler::sample_shot;

    fn layout(n_com: u32, n_buf: u32, total: u32, scope: ReweightScope) -> WindowLayout {
        WindowLayout::new(n_com, n_buf, total, scope).unwrap()
    }

    #[test]
    fn degenerate_single_window_covers_everything() {
        let l = layout(2, 2, 4, ReweightScope::FullWindow);
        assert_eq!(l.num_windows(), 1);
        let bounds = l.window_bounds(0).unwrap();
        assert_eq!((bounds.start, bounds.end), (0, 4));
        assert!(bounds.is_final);
        assert_eq!(bounds.commit_end, 4);

        let model = build_repetition_code(3, 4, 0.1, 0.1).unwrap();
        let slice = window_slice(&model, &l, 0).unwrap();
        assert_eq!(slice.model.num_mechanisms(), model.num_mechanisms());
        assert_eq!(slice.model.num_detectors(), model.num_detectors());
        // Identity maps for the whole-model window.
        assert!(slice.mechanism_map.iter().enumerate().all(|(i, &q)| i == q as usize));
        assert!(slice.detector_map.iter().enumerate().all(|(i, &d)| i == d as usize));
    }

    #[test]
    fn window_arithmetic_for_eight_rounds() {
        let l = layout(2, 2, 8, ReweightScope::FullWindow);
        // Slices exist wherever the start lies inside the experiment.
        let starts: Vec<u32> = (0..4).map(|i| l.window_bounds(i).unwrap().start).collect();
        assert_eq!(starts, vec![0, 2, 4, 6]);
        let w1 = l.window_bounds(1).unwrap();
        assert_eq!((w1.start, w1.end), (2, 6));
        assert!(l.window_bounds(4).is_err());
        // The decode pass stops at the first window reaching the end.
        assert_eq!(l.num_windows(), 3);
        assert!(l.window_bounds(2).unwrap().is_final);
    }

    #[test]
    fn untagged_mechanisms_are_rejected() {
        let model = crate::error_model::DetectorErrorModel::from_mechanisms(vec![
            crate::error_model::ErrorMechanism::new(0.1, vec![0], vec![]).unwrap(),
        ]);
        let l = layout(1, 0, 1, ReweightScope::FullWindow);
        assert_eq!(
            window_slice(&model, &l, 0).unwrap_err(),
            WindowError::UntaggedMechanism(0)
        );
    }

    #[test]
    fn single_measurement_error_commits_like_global_decoding() {
        // Two commit-only windows; the round-1 measurement error triggers
        // detectors in layers 1 and 2 and must be committed by window 0.
        let model = build_repetition_code(3, 4, 0.1, 0.1).unwrap();
        let l = layout(2, 0, 4, ReweightScope::FullWindow);
        assert_eq!(l.num_windows(), 2);
        let meas_round1 = model
            .mechanisms()
            .iter()
            .position(|m| m.round == Some(1) && m.observables.is_empty() && m.detectors.len() == 2
                && m.detectors[1] - m.detectors[0] == 2)
            .unwrap();
        let mut error = vec![false; model.num_mechanisms()];
        error[meas_round1] = true;
        let syndrome = crate::sampler::syndrome_of(&model, &error).unwrap();

        let kind = DecoderKind::Mwpm(MwpmConfig::default());
        let mut windowed = SlidingWindowDecoder::new(&model, &l, &kind).unwrap();
        let pass = windowed.first_pass(&syndrome);
        assert!(pass.failure.is_none());

        let priors = Priors::from_model(&model);
        let graph = crate::decoders::build_matching_graph(&model, &priors).unwrap();
        let global = crate::decoders::decode_mwpm(&graph, &syndrome).unwrap();
        assert_eq!(pass.committed, global);
        assert!(pass.committed.0[meas_round1]);
    }

    #[test]
    fn zero_syndrome_accepts_with_empty_commit() {
        let model = build_repetition_code(3, 4, 0.1, 0.1).unwrap();
        let l = layout(2, 2, 4, ReweightScope::FullWindow);
        let kind = DecoderKind::BpOsd(BpConfig::default());
        let mut windowed = SlidingWindowDecoder::new(&model, &l, &kind).unwrap();
        let verdict = windowed
            .decode(
                &vec![false; model.num_detectors()],
                Criterion::lec(3).unwrap(),
                &ReweightRule::ratio(2.0).unwrap(),
            )
            .unwrap();
        assert!(verdict.accepted);
        assert!(verdict.committed.unwrap().is_empty());
    }

    #[test]
    fn single_window_layout_reproduces_global_verdicts() {
        let model = build_repetition_code(3, 4, 0.08, 0.08).unwrap();
        let l = layout(4, 0, 4, ReweightScope::FullWindow);
        let kind = DecoderKind::BpOsd(BpConfig::default());
        let mut windowed = SlidingWindowDecoder::new(&model, &l, &kind).unwrap();
        let mut global = kind.build(&model).unwrap();
        let priors = Priors::from_model(&model);
        let observables = model.observable_matrix();
        let criterion = Criterion::lec(3).unwrap();
        let rule = ReweightRule::ratio(1.5).unwrap();
        for i in 0..500 {
            let shot = sample_shot(&model, 44, i);
            let w = windowed.decode(&shot.syndrome, criterion, &rule).unwrap();
            let g = argument_reweighting(
                global.as_mut(),
                &priors,
                &shot.syndrome,
                &observables,
                criterion,
                &rule,
            )
            .unwrap();
            assert_eq!(w.accepted, g.accepted);
            assert_eq!(w.committed, g.correction);
        }
    }

    #[test]
    fn committed_corrections_satisfy_the_full_syndrome() {
        let model = build_repetition_code(5, 6, 0.05, 0.05).unwrap();
        let l = layout(2, 2, 6, ReweightScope::FullWindow);
        let kind = DecoderKind::BpOsd(BpConfig::default());
        let mut windowed = SlidingWindowDecoder::new(&model, &l, &kind).unwrap();
        let h = model.check_matrix();
        let mut accepted = 0;
        for i in 0..400 {
            let shot = sample_shot(&model, 91, i);
            let verdict = windowed
                .decode(
                    &shot.syndrome,
                    Criterion::lec(2).unwrap(),
                    &ReweightRule::ratio(1.5).unwrap(),
                )
                .unwrap();
            if let Some(committed) = verdict.committed {
                accepted += 1;
                assert_eq!(h.mul_vec(&committed.0).unwrap(), shot.syndrome);
            }
        }
        assert!(accepted > 0);
    }

    #[test]
    fn commit_only_scope_matches_full_window_off_the_buffer() {
        // When the first-round correction touches no buffer mechanism the two
        // scopes reweight identically.
        let model = build_repetition_code(3, 4, 0.1, 0.1).unwrap();
        let kind = DecoderKind::BpOsd(BpConfig::default());
        let rule = ReweightRule::ratio(2.0).unwrap();
        let criterion = Criterion::lec(2).unwrap();
        let mut full = SlidingWindowDecoder::new(
            &model,
            &layout(2, 2, 4, ReweightScope::FullWindow),
            &kind,
        )
        .unwrap();
        let mut commit_only = SlidingWindowDecoder::new(
            &model,
            &layout(2, 2, 4, ReweightScope::CommitOnly),
            &kind,
        )
        .unwrap();
        // Single window (degenerate): the whole span is commit region, so
        // both scopes agree on every shot.
        for i in 0..300 {
            let shot = sample_shot(&model, 17, i);
            let a = full.decode(&shot.syndrome, criterion, &rule).unwrap();
            let b = commit_only.decode(&shot.syndrome, criterion, &rule).unwrap();
            assert_eq!(a, b);
        }
    }
}
