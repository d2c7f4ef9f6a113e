//! Cross-module invariants checked on randomized inputs.

use proptest::prelude::*;

use postsel::decoders::{
    build_matching_graph, decode_ml_bruteforce, decode_mwpm, log_probability, BpConfig,
    BpOsdDecoder, Correction, Decoder, ExactMlDecoder, Priors,
};
use postsel::dem::{parse_dem, serialize_dem};
use postsel::error_model::{DetectorErrorModel, ErrorMechanism};
use postsel::reweighting::{
    argument_reweighting, reweight_gap, reweight_ratio, Criterion, ReweightRule,
};
use postsel::sampler::{logical_of, sample_shot, syndrome_of};

fn arb_mechanism(num_detectors: u32, max_fanout: usize) -> impl Strategy<Value = ErrorMechanism> {
    (
        0.01f64..0.45,
        proptest::collection::btree_set(0..num_detectors, 1..=max_fanout),
        proptest::bool::ANY,
    )
        .prop_map(|(p, detectors, flips)| {
            let observables = if flips { vec![0] } else { vec![] };
            ErrorMechanism::new(p, detectors.into_iter().collect(), observables).unwrap()
        })
}

fn arb_model(max_fanout: usize) -> impl Strategy<Value = DetectorErrorModel> {
    (1u32..6).prop_flat_map(move |num_detectors| {
        proptest::collection::vec(arb_mechanism(num_detectors, max_fanout), 1..8).prop_map(
            move |mechanisms| {
                DetectorErrorModel::new(mechanisms, num_detectors as usize, 1).unwrap()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn syndrome_and_logical_maps_are_linear(
        model in arb_model(3),
        seed in 0u64..1000,
    ) {
        let a = sample_shot(&model, seed, 0).error;
        let b = sample_shot(&model, seed, 1).error;
        let sum: Vec<bool> = a.iter().zip(&b).map(|(&x, &y)| x ^ y).collect();
        let xor = |u: Vec<bool>, v: Vec<bool>| -> Vec<bool> {
            u.into_iter().zip(v).map(|(x, y)| x ^ y).collect()
        };
        prop_assert_eq!(
            syndrome_of(&model, &sum).unwrap(),
            xor(syndrome_of(&model, &a).unwrap(), syndrome_of(&model, &b).unwrap())
        );
        prop_assert_eq!(
            logical_of(&model, &sum).unwrap(),
            xor(logical_of(&model, &a).unwrap(), logical_of(&model, &b).unwrap())
        );
    }

    #[test]
    fn canonicalize_is_idempotent_on_random_models(model in arb_model(3)) {
        let once = model.canonicalize();
        prop_assert!(once.is_canonical());
        prop_assert_eq!(once.clone(), once.canonicalize());
        prop_assert!(once.num_mechanisms() <= model.num_mechanisms());
    }

    #[test]
    fn text_format_round_trips(model in arb_model(3)) {
        // The format tags everything round 0; normalize before comparing.
        let tagged = DetectorErrorModel::new(
            model
                .mechanisms()
                .iter()
                .map(|m| m.clone().with_round(0))
                .collect(),
            model.num_detectors(),
            model.num_observables(),
        )
        .unwrap();
        let text = serialize_dem(&tagged);
        let parsed = parse_dem(&text).unwrap();
        prop_assert_eq!(&parsed, &tagged);
        prop_assert_eq!(serialize_dem(&parsed), text);
    }

    #[test]
    fn reweight_factor_identities(
        probs in proptest::collection::vec(1e-6f64..0.5, 1..40),
        b in 1.0f64..30.0,
        mask_seed in 0u64..u64::MAX,
    ) {
        let priors = Priors::new(probs.clone()).unwrap();
        let bits: Vec<bool> = (0..probs.len()).map(|q| mask_seed >> (q % 64) & 1 == 1).collect();
        let correction = Correction(bits);
        if correction.is_empty() {
            return Ok(());
        }
        let ln_pc: f64 = correction.support().map(|q| priors[q].ln()).sum();

        let ratio = reweight_ratio(&priors, &correction, b);
        let ln_ratio: f64 = correction.support().map(|q| ratio.priors[q].ln()).sum();
        prop_assert!(((ln_ratio - b * ln_pc) / (b * ln_pc)).abs() < 1e-12);

        let gap = reweight_gap(&priors, &correction, b);
        let ln_gap: f64 = correction.support().map(|q| gap.priors[q].ln()).sum();
        prop_assert!(((ln_gap - (ln_pc - b)) / (ln_pc - b)).abs() < 1e-12);
    }

    #[test]
    fn acceptance_sets_nest(
        model in arb_model(3),
        seed in 0u64..10_000,
        z in 0.0f64..3.0,
    ) {
        let model = model.canonicalize();
        let priors = Priors::from_model(&model);
        let observables = model.observable_matrix();
        let rule = ReweightRule::ratio(1.0 + z).unwrap();
        let mut decoder = ExactMlDecoder::new(&model).unwrap();
        let shot = sample_shot(&model, seed, 0);
        let mut accepted = Vec::new();
        for criterion in [
            Criterion::Pec,
            Criterion::lec(2).unwrap(),
            Criterion::lec(3).unwrap(),
            Criterion::lec(4).unwrap(),
        ] {
            let verdict = argument_reweighting(
                &mut decoder,
                &priors,
                &shot.syndrome,
                &observables,
                criterion,
                &rule,
            )
            .unwrap();
            accepted.push(verdict.accepted);
        }
        // PEC implies 2R-LEC; each extra round only removes shots.
        prop_assert!(!accepted[0] || accepted[1]);
        prop_assert!(!accepted[3] || accepted[2]);
        prop_assert!(!accepted[2] || accepted[1]);
    }

    #[test]
    fn decoders_never_beat_the_oracle(
        model in arb_model(2),
        seed in 0u64..10_000,
    ) {
        let model = model.canonicalize();
        let priors = Priors::from_model(&model);
        let shot = sample_shot(&model, seed, 0);
        let oracle = decode_ml_bruteforce(&model, &shot.syndrome).unwrap();
        let best = log_probability(&priors, &oracle.correction.0);

        let mut bp = BpOsdDecoder::new(&model, BpConfig::default()).unwrap();
        let c = bp.decode(&priors, &shot.syndrome).unwrap();
        prop_assert_eq!(
            syndrome_of(&model, &c.0).unwrap(),
            shot.syndrome.clone()
        );
        prop_assert!(log_probability(&priors, &c.0) <= best + 1e-9);

        let graph = build_matching_graph(&model, &priors).unwrap();
        let c = decode_mwpm(&graph, &shot.syndrome).unwrap();
        prop_assert_eq!(syndrome_of(&model, &c.0).unwrap(), shot.syndrome.clone());
        prop_assert!(log_probability(&priors, &c.0) <= best + 1e-9);
    }

    #[test]
    fn identity_rule_never_rejects(
        model in arb_model(3),
        seed in 0u64..10_000,
    ) {
        let model = model.canonicalize();
        let priors = Priors::from_model(&model);
        let observables = model.observable_matrix();
        let mut decoder = ExactMlDecoder::new(&model).unwrap();
        let shot = sample_shot(&model, seed, 0);
        let baseline = decoder.decode(&priors, &shot.syndrome).unwrap();
        for rule in [ReweightRule::ratio(1.0).unwrap(), ReweightRule::gap(1e-12).unwrap()] {
            let verdict = argument_reweighting(
                &mut decoder,
                &priors,
                &shot.syndrome,
                &observables,
                Criterion::Pec,
                &rule,
            )
            .unwrap();
            prop_assert!(verdict.accepted);
            prop_assert_eq!(verdict.correction.clone().unwrap(), baseline.clone());
        }
    }
}

// Saturating suppression: when every reweighted prior clamps at the floor,
// accepted shots are exactly those whose first-round correction was empty.
#[test]
fn clamped_suppression_only_accepts_empty_first_rounds() {
    let model = postsel::build_repetition_code(3, 1, 0.1, 0.0).unwrap();
    let priors = Priors::from_model(&model);
    let observables = model.observable_matrix();
    let rule = ReweightRule::ratio(400.0).unwrap();
    let mut decoder = ExactMlDecoder::new(&model).unwrap();
    let mut saw_clamp = false;
    for mask in 0u32..4 {
        let syndrome: Vec<bool> = (0..2).map(|d| mask >> d & 1 == 1).collect();
        let verdict = argument_reweighting(
            &mut decoder,
            &priors,
            &syndrome,
            &observables,
            Criterion::Pec,
            &rule,
        )
        .unwrap();
        assert_eq!(verdict.accepted, mask == 0);
        saw_clamp |= verdict.clamp_events > 0;
    }
    assert!(saw_clamp, "b=400 at p=0.1 must clamp (400 ln 0.1 < floor)");
}

// The identity-rule comparison above covers gap b -> 0; this pins the exact
// b = 1 ratio behavior down to bit-identical priors.
#[test]
fn ratio_identity_is_bitwise() {
    let priors = Priors::new(vec![0.3, 0.001, 0.49999]).unwrap();
    let correction = Correction(vec![true, true, true]);
    let out = reweight_ratio(&priors, &correction, 1.0);
    assert_eq!(&*out.priors, &*priors);
    assert_eq!(out.clamp_events, 0);
}
