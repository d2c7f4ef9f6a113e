//! Seeded Monte Carlo sampling of error configurations.
//!
//! Each shot draws its randomness from a counter-based stream keyed by
//! `(seed, shot_index)`, so shot `i` of a run is the same bit pattern no
//! matter how shots are batched across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error_model::{DetectorErrorModel, ModelError};

/// One sampled error configuration with its syndrome and true logical class.
#[derive(Debug, Clone, PartialEq)]
pub struct Shot {
    pub error: Vec<bool>,
    pub syndrome: Vec<bool>,
    pub logical: Vec<bool>,
}

/// Samples mechanism `q` independently with its prior probability.
///
/// The output is fully determined by `(seed, shot_index)`.
pub fn sample_shot(model: &DetectorErrorModel, seed: u64, shot_index: u64) -> Shot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot_index);
    let mut error = vec![false; model.num_mechanisms()];
    let mut syndrome = vec![false; model.num_detectors()];
    let mut logical = vec![false; model.num_observables()];
    for (q, mech) in model.mechanisms().iter().enumerate() {
        if rng.gen::<f64>() < mech.probability {
            error[q] = true;
            for &d in &mech.detectors {
                syndrome[d as usize] ^= true;
            }
            for &o in &mech.observables {
                logical[o as usize] ^= true;
            }
        }
    }
    Shot {
        error,
        syndrome,
        logical,
    }
}

/// Syndrome of an error configuration: which detectors fire.
pub fn syndrome_of(model: &DetectorErrorModel, error: &[bool]) -> Result<Vec<bool>, ModelError> {
    if error.len() != model.num_mechanisms() {
        return Err(ModelError::LengthMismatch {
            expected: model.num_mechanisms(),
            got: error.len(),
        });
    }
    let mut syndrome = vec![false; model.num_detectors()];
    for (q, &bit) in error.iter().enumerate() {
        if bit {
            for &d in &model.mechanisms()[q].detectors {
                syndrome[d as usize] ^= true;
            }
        }
    }
    Ok(syndrome)
}

/// Logical class of an error configuration: which observables flip.
pub fn logical_of(model: &DetectorErrorModel, error: &[bool]) -> Result<Vec<bool>, ModelError> {
    if error.len() != model.num_mechanisms() {
        return Err(ModelError::LengthMismatch {
            expected: model.num_mechanisms(),
            got: error.len(),
        });
    }
    let mut logical = vec![false; model.num_observables()];
    for (q, &bit) in error.iter().enumerate() {
        if bit {
            for &o in &model.mechanisms()[q].observables {
                logical[o as usize] ^= true;
            }
        }
    }
    Ok(logical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::{build_repetition_code, ErrorMechanism};

    #[test]
    fn shot_is_deterministic_per_index() {
        let model = build_repetition_code(5, 3, 0.1, 0.05).unwrap();
        for index in [0u64, 1, 17, 12345] {
            assert_eq!(sample_shot(&model, 7, index), sample_shot(&model, 7, index));
        }
        assert_ne!(
            sample_shot(&model, 7, 0).error,
            sample_shot(&model, 8, 0).error,
        );
    }

    #[test]
    fn shot_syndrome_matches_recomputation() {
        let model = build_repetition_code(5, 2, 0.2, 0.1).unwrap();
        for index in 0..200 {
            let shot = sample_shot(&model, 99, index);
            assert_eq!(shot.syndrome, syndrome_of(&model, &shot.error).unwrap());
            assert_eq!(shot.logical, logical_of(&model, &shot.error).unwrap());
        }
    }

    #[test]
    fn inclusion_frequency_tracks_prior() {
        // Single mechanism with p close to 1; frequency must land within
        // four binomial standard deviations over 1e5 shots.
        let p = 0.99;
        let model = crate::error_model::DetectorErrorModel::from_mechanisms(vec![
            ErrorMechanism::new(p, vec![0], vec![]).unwrap(),
        ]);
        let shots = 100_000u64;
        let hits = (0..shots)
            .filter(|&i| sample_shot(&model, 3, i).error[0])
            .count() as f64;
        let sigma = (p * (1.0 - p) * shots as f64).sqrt();
        assert!((hits - p * shots as f64).abs() < 4.0 * sigma);
    }

    #[test]
    fn mechanism_frequencies_pass_chi_square() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let model = build_repetition_code(3, 1, 0.1, 0.0).unwrap();
        let shots = 200_000u64;
        let mut counts = vec![0u64; model.num_mechanisms()];
        for i in 0..shots {
            for (q, &bit) in sample_shot(&model, 11, i).error.iter().enumerate() {
                if bit {
                    counts[q] += 1;
                }
            }
        }
        let mut statistic = 0.0;
        for (q, &n) in counts.iter().enumerate() {
            let p = model.mechanisms()[q].probability;
            let expected = p * shots as f64;
            let variance = shots as f64 * p * (1.0 - p);
            statistic += (n as f64 - expected).powi(2) / variance;
        }
        let dist = ChiSquared::new(model.num_mechanisms() as f64).unwrap();
        assert!(statistic < dist.inverse_cdf(0.9999));
    }

    #[test]
    fn hand_multiplied_syndromes() {
        let model = build_repetition_code(3, 1, 0.1, 0.0).unwrap();
        assert_eq!(
            syndrome_of(&model, &[true, false, false]).unwrap(),
            vec![true, false]
        );
        assert_eq!(logical_of(&model, &[true, false, false]).unwrap(), vec![true]);
        // The all-ones configuration is the undetectable logical.
        assert_eq!(
            syndrome_of(&model, &[true, true, true]).unwrap(),
            vec![false, false]
        );
        assert_eq!(logical_of(&model, &[true, true, true]).unwrap(), vec![true]);
        assert_eq!(
            syndrome_of(&model, &[false, false, false]).unwrap(),
            vec![false, false]
        );
        assert_eq!(
            logical_of(&model, &[false, false, false]).unwrap(),
            vec![false]
        );
    }

    #[test]
    fn rejects_length_mismatch() {
        let model = build_repetition_code(3, 1, 0.1, 0.0).unwrap();
        assert!(syndrome_of(&model, &[true]).is_err());
        assert!(logical_of(&model, &[true]).is_err());
    }

    #[test]
    fn repartitioning_preserves_shots() {
        let model = build_repetition_code(3, 2, 0.15, 0.1).unwrap();
        let serial: Vec<Shot> = (0..64).map(|i| sample_shot(&model, 5, i)).collect();
        for workers in [2u64, 3, 7] {
            let mut chunked: Vec<Shot> = Vec::new();
            for w in 0..workers {
                let lo = w * 64 / workers;
                let hi = (w + 1) * 64 / workers;
                chunked.extend((lo..hi).map(|i| sample_shot(&model, 5, i)));
            }
            assert_eq!(serial, chunked);
        }
    }
}
