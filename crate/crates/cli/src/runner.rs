//! Monte Carlo experiment runner: shared-shot sweeps over the suppression
//! parameter with deterministic worker partitioning.
//!
//! Every shot is decoded once under the base priors; that first-round
//! correction is shared by the baseline estimate and by every point of the
//! sweep, so a sweep with `k` suppression values costs one first decode plus
//! the re-decode rounds of each point. Workers own contiguous shot ranges and
//! integer counters are merged in worker order, which makes the results
//! document a pure function of (config, seed).

use postsel::decoders::{Correction, Priors};
use postsel::error_model::SparseBinaryMatrix;
use postsel::reweighting::{post_select_with_first, Rejection, ReweightRule, ReweightVariant};
use postsel::sampler::sample_shot;
use postsel::windowing::SlidingWindowDecoder;

use crate::config::RunPlan;
use crate::report::{ModelSummary, RateRow, ResultsDoc, ZRow, RESULTS_SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, Default)]
struct ZCounters {
    accepted: u64,
    logical_errors: u64,
    clamp_events: u64,
    decoder_failures: u64,
}

#[derive(Debug, Clone, Default)]
struct ChunkCounters {
    baseline_logical_errors: u64,
    baseline_decoder_failures: u64,
    per_z: Vec<ZCounters>,
}

fn make_rule(variant: ReweightVariant, b: f64) -> ReweightRule {
    match variant {
        ReweightVariant::Ratio => ReweightRule::ratio(b).expect("b = 1 + z >= 1"),
        ReweightVariant::Gap => ReweightRule::gap(b).expect("b = 1 + z > 0"),
    }
}

fn logical_flips(observables: &SparseBinaryMatrix, correction: &Correction) -> Vec<bool> {
    let mut class = vec![false; observables.rows()];
    for q in correction.support() {
        for &o in observables.column(q) {
            class[o as usize] ^= true;
        }
    }
    class
}

fn run_chunk_global(
    plan: &RunPlan,
    rules: &[ReweightRule],
    range: std::ops::Range<u64>,
) -> Result<ChunkCounters, CliError> {
    let model = &plan.model;
    let priors = Priors::from_model(model);
    let observables = model.observable_matrix();
    let mut decoder = plan
        .decoder
        .build(model)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut counters = ChunkCounters {
        per_z: vec![ZCounters::default(); rules.len()],
        ..ChunkCounters::default()
    };
    for index in range {
        let shot = sample_shot(model, plan.seed, index);
        let first = match decoder.decode(&priors, &shot.syndrome) {
            Ok(c) => c,
            Err(_) => {
                // An undecodable shot counts as a baseline logical error and
                // as a rejection at every sweep point.
                counters.baseline_decoder_failures += 1;
                counters.baseline_logical_errors += 1;
                for z in counters.per_z.iter_mut() {
                    z.decoder_failures += 1;
                }
                continue;
            }
        };
        let logical_error = logical_flips(&observables, &first) != shot.logical;
        if logical_error {
            counters.baseline_logical_errors += 1;
        }
        if first.is_empty() {
            // Accepted by default everywhere; the committed correction is
            // the baseline one.
            for z in counters.per_z.iter_mut() {
                z.accepted += 1;
                z.logical_errors += logical_error as u64;
            }
            continue;
        }
        for (z, rule) in counters.per_z.iter_mut().zip(rules) {
            let outcome = post_select_with_first(
                decoder.as_mut(),
                &priors,
                &shot.syndrome,
                &observables,
                plan.criterion,
                rule,
                &first,
            )
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            z.clamp_events += outcome.clamp_events;
            if outcome.accepted {
                z.accepted += 1;
                z.logical_errors += logical_error as u64;
            } else if matches!(outcome.rejection, Some(Rejection::Decoder { .. })) {
                z.decoder_failures += 1;
            }
        }
    }
    Ok(counters)
}

fn run_chunk_windowed(
    plan: &RunPlan,
    rules: &[ReweightRule],
    range: std::ops::Range<u64>,
) -> Result<ChunkCounters, CliError> {
    let model = &plan.model;
    let layout = plan.window.expect("windowed chunk requires a layout");
    let observables = model.observable_matrix();
    let mut windowed = SlidingWindowDecoder::new(model, &layout, &plan.decoder)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut counters = ChunkCounters {
        per_z: vec![ZCounters::default(); rules.len()],
        ..ChunkCounters::default()
    };
    for index in range {
        let shot = sample_shot(model, plan.seed, index);
        let pass = windowed.first_pass(&shot.syndrome);
        if pass.failure.is_some() {
            counters.baseline_decoder_failures += 1;
            counters.baseline_logical_errors += 1;
        }
        let logical_error = pass.failure.is_some()
            || logical_flips(&observables, &pass.committed) != shot.logical;
        if logical_error && pass.failure.is_none() {
            counters.baseline_logical_errors += 1;
        }
        for (z, rule) in counters.per_z.iter_mut().zip(rules) {
            let outcome = windowed
                .evaluate_pass(&pass, plan.criterion, rule)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            z.clamp_events += outcome.clamp_events;
            if outcome.accepted {
                z.accepted += 1;
                z.logical_errors += logical_error as u64;
            } else if matches!(outcome.rejection, Some((_, Rejection::Decoder { .. }))) {
                z.decoder_failures += 1;
            }
        }
    }
    Ok(counters)
}

fn merge(mut total: ChunkCounters, part: ChunkCounters) -> ChunkCounters {
    total.baseline_logical_errors += part.baseline_logical_errors;
    total.baseline_decoder_failures += part.baseline_decoder_failures;
    for (t, p) in total.per_z.iter_mut().zip(part.per_z) {
        t.accepted += p.accepted;
        t.logical_errors += p.logical_errors;
        t.clamp_events += p.clamp_events;
        t.decoder_failures += p.decoder_failures;
    }
    total
}

/// Runs the experiment described by the plan and assembles the results
/// document. Deterministic for fixed (config, seed) at any worker count.
pub fn run_experiment(plan: &RunPlan) -> Result<ResultsDoc, CliError> {
    let rules: Vec<ReweightRule> = plan
        .z_values
        .iter()
        .map(|&z| make_rule(plan.rule_variant, 1.0 + z))
        .collect();

    let workers = plan.workers.min(plan.shots.max(1) as usize).max(1);
    let bounds: Vec<u64> = (0..=workers as u64)
        .map(|w| w * plan.shots / workers as u64)
        .collect();
    let run_chunk = |range: std::ops::Range<u64>| -> Result<ChunkCounters, CliError> {
        if plan.window.is_some() {
            run_chunk_windowed(plan, &rules, range)
        } else {
            run_chunk_global(plan, &rules, range)
        }
    };

    let merged = if workers == 1 {
        run_chunk(0..plan.shots)?
    } else {
        let parts: Vec<Result<ChunkCounters, CliError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let range = bounds[w]..bounds[w + 1];
                    let run_chunk = &run_chunk;
                    scope.spawn(move || run_chunk(range))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        });
        let mut merged = ChunkCounters {
            per_z: vec![ZCounters::default(); rules.len()],
            ..ChunkCounters::default()
        };
        for part in parts {
            merged = merge(merged, part?);
        }
        merged
    };

    let baseline_rate = postsel::metrics::RateEstimate::from_counts(
        plan.shots,
        plan.shots,
        merged.baseline_logical_errors,
    );
    let baseline = RateRow::from_estimate(&baseline_rate, merged.baseline_decoder_failures);
    let rows = plan
        .z_values
        .iter()
        .zip(&merged.per_z)
        .map(|(&z, counters)| {
            let estimate = postsel::metrics::RateEstimate::from_counts(
                plan.shots,
                counters.accepted,
                counters.logical_errors,
            );
            debug_assert_eq!(
                counters.accepted + (plan.shots - counters.accepted),
                plan.shots
            );
            let suppression = postsel::metrics::suppression_factor(&baseline_rate, &estimate);
            ZRow {
                z,
                b: 1.0 + z,
                rate: RateRow::from_estimate(&estimate, counters.decoder_failures),
                suppression_factor: suppression.as_ref().map(|s| s.value),
                suppression_sigma: suppression.as_ref().map(|s| s.sigma),
                clamp_events: counters.clamp_events,
            }
        })
        .collect();

    Ok(ResultsDoc {
        schema_version: RESULTS_SCHEMA_VERSION,
        tool: "postsel".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: plan.config_echo.clone(),
        model: ModelSummary::of(&plan.model),
        baseline,
        rows,
    })
}
