//! Detector error models: independent error mechanisms with prior
//! probabilities, the detectors they trigger, and the logical observables
//! they flip.
//!
//! A model is the decoder-facing description of noise. Mechanisms are
//! independent Bernoulli variables, so the probability of an error
//! configuration `e` is `prod_{q in e} p(q) * prod_{q notin e} (1 - p(q))`.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("mechanism probability {0} outside (0, 1)")]
    ProbabilityRange(f64),
    #[error("mechanism has duplicate {kind} index {index}")]
    DuplicateIndex { kind: &'static str, index: u32 },
    #[error("mechanism affects no detectors and no observables")]
    EmptyMechanism,
    #[error("mechanism {mechanism} references {kind} {index}, but the model declares only {count}")]
    IndexOutOfRange {
        mechanism: usize,
        kind: &'static str,
        index: u32,
        count: usize,
    },
    #[error("distance must be an odd integer >= 3, got {0}")]
    InvalidDistance(u32),
    #[error("rounds must be >= 1, got {0}")]
    InvalidRounds(u32),
    #[error("{name} = {value} outside {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("vector length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// One independent error mechanism.
///
/// `detectors` and `observables` are sorted, duplicate-free index sets. The
/// optional `round` tag records which measurement round the mechanism belongs
/// to; builders assign it and sliding-window decoding requires it.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMechanism {
    pub probability: f64,
    pub detectors: Vec<u32>,
    pub observables: Vec<u32>,
    pub round: Option<u32>,
}

impl ErrorMechanism {
    pub fn new(
        probability: f64,
        mut detectors: Vec<u32>,
        mut observables: Vec<u32>,
    ) -> Result<Self, ModelError> {
        if !(probability > 0.0 && probability < 1.0) {
            return Err(ModelError::ProbabilityRange(probability));
        }
        detectors.sort_unstable();
        observables.sort_unstable();
        for pair in detectors.windows(2) {
            if pair[0] == pair[1] {
                return Err(ModelError::DuplicateIndex {
                    kind: "detector",
                    index: pair[0],
                });
            }
        }
        for pair in observables.windows(2) {
            if pair[0] == pair[1] {
                return Err(ModelError::DuplicateIndex {
                    kind: "observable",
                    index: pair[0],
                });
            }
        }
        if detectors.is_empty() && observables.is_empty() {
            return Err(ModelError::EmptyMechanism);
        }
        Ok(Self {
            probability,
            detectors,
            observables,
            round: None,
        })
    }

    pub fn with_round(mut self, round: u32) -> Self {
        self.round = Some(round);
        self
    }
}

/// An ordered list of error mechanisms together with the detector and
/// observable counts they are defined against.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorErrorModel {
    mechanisms: Vec<ErrorMechanism>,
    num_detectors: usize,
    num_observables: usize,
}

impl DetectorErrorModel {
    /// Builds a model with explicitly declared counts, validating that every
    /// referenced index is in range.
    pub fn new(
        mechanisms: Vec<ErrorMechanism>,
        num_detectors: usize,
        num_observables: usize,
    ) -> Result<Self, ModelError> {
        for (q, mech) in mechanisms.iter().enumerate() {
            if let Some(&d) = mech.detectors.last() {
                if d as usize >= num_detectors {
                    return Err(ModelError::IndexOutOfRange {
                        mechanism: q,
                        kind: "detector",
                        index: d,
                        count: num_detectors,
                    });
                }
            }
            if let Some(&o) = mech.observables.last() {
                if o as usize >= num_observables {
                    return Err(ModelError::IndexOutOfRange {
                        mechanism: q,
                        kind: "observable",
                        index: o,
                        count: num_observables,
                    });
                }
            }
        }
        Ok(Self {
            mechanisms,
            num_detectors,
            num_observables,
        })
    }

    /// Builds a model inferring counts as one past the largest referenced
    /// index.
    pub fn from_mechanisms(mechanisms: Vec<ErrorMechanism>) -> Self {
        let num_detectors = mechanisms
            .iter()
            .filter_map(|m| m.detectors.last())
            .max()
            .map_or(0, |&d| d as usize + 1);
        let num_observables = mechanisms
            .iter()
            .filter_map(|m| m.observables.last())
            .max()
            .map_or(0, |&o| o as usize + 1);
        Self {
            mechanisms,
            num_detectors,
            num_observables,
        }
    }

    pub fn mechanisms(&self) -> &[ErrorMechanism] {
        &self.mechanisms
    }

    pub fn num_mechanisms(&self) -> usize {
        self.mechanisms.len()
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_observables(&self) -> usize {
        self.num_observables
    }

    /// Per-mechanism prior probabilities, in mechanism order.
    pub fn prior_probabilities(&self) -> Vec<f64> {
        self.mechanisms.iter().map(|m| m.probability).collect()
    }

    /// Merges mechanisms sharing an identical (detectors, observables) pair.
    ///
    /// Two copies of the same mechanism with probabilities p1 and p2 act like
    /// a single mechanism that fires when exactly one of them does, so the
    /// merged prior is `p1 (1 - p2) + p2 (1 - p1)`. First-occurrence order and
    /// round tags are preserved. Idempotent.
    pub fn canonicalize(&self) -> DetectorErrorModel {
        let mut merged: Vec<ErrorMechanism> = Vec::with_capacity(self.mechanisms.len());
        let mut index: BTreeMap<(&[u32], &[u32]), usize> = BTreeMap::new();
        for mech in &self.mechanisms {
            let key = (mech.detectors.as_slice(), mech.observables.as_slice());
            match index.get(&key) {
                Some(&slot) => {
                    let p1 = merged[slot].probability;
                    let p2 = mech.probability;
                    merged[slot].probability = p1 * (1.0 - p2) + p2 * (1.0 - p1);
                }
                None => {
                    index.insert(key, merged.len());
                    merged.push(mech.clone());
                }
            }
        }
        DetectorErrorModel {
            mechanisms: merged,
            num_detectors: self.num_detectors,
            num_observables: self.num_observables,
        }
    }

    /// True when no two mechanisms share a (detectors, observables) pair.
    pub fn is_canonical(&self) -> bool {
        let mut seen = BTreeMap::new();
        for mech in &self.mechanisms {
            if seen
                .insert((mech.detectors.as_slice(), mech.observables.as_slice()), ())
                .is_some()
            {
                return false;
            }
        }
        true
    }

    /// The check matrix H (detectors x mechanisms) and the observable matrix
    /// (observables x mechanisms). The syndrome of an error configuration is
    /// `H e` over GF(2) and its logical class is the observable-matrix
    /// product.
    pub fn check_matrices(&self) -> (SparseBinaryMatrix, SparseBinaryMatrix) {
        let h = SparseBinaryMatrix::from_columns(
            self.num_detectors,
            self.mechanisms.iter().map(|m| m.detectors.clone()).collect(),
        );
        let obs = SparseBinaryMatrix::from_columns(
            self.num_observables,
            self.mechanisms
                .iter()
                .map(|m| m.observables.clone())
                .collect(),
        );
        (h, obs)
    }

    pub fn check_matrix(&self) -> SparseBinaryMatrix {
        self.check_matrices().0
    }

    pub fn observable_matrix(&self) -> SparseBinaryMatrix {
        self.check_matrices().1
    }
}

/// Free-function form of [`DetectorErrorModel::canonicalize`].
pub fn canonicalize(model: &DetectorErrorModel) -> DetectorErrorModel {
    model.canonicalize()
}

/// Free-function form of [`DetectorErrorModel::check_matrices`].
pub fn check_matrices(model: &DetectorErrorModel) -> (SparseBinaryMatrix, SparseBinaryMatrix) {
    model.check_matrices()
}

/// Sparse binary matrix stored as sorted set-bit lists per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBinaryMatrix {
    rows: usize,
    columns: Vec<Vec<u32>>,
}

impl SparseBinaryMatrix {
    pub fn from_columns(rows: usize, columns: Vec<Vec<u32>>) -> Self {
        debug_assert!(columns
            .iter()
            .all(|col| col.windows(2).all(|w| w[0] < w[1])
                && col.last().map_or(true, |&r| (r as usize) < rows)));
        Self { rows, columns }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// Sorted row indices of the set bits in column `j`.
    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    /// Sorted column indices of the set bits in each row.
    pub fn row_adjacency(&self) -> Vec<Vec<u32>> {
        let mut rows = vec![Vec::new(); self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &r in col {
                rows[r as usize].push(j as u32);
            }
        }
        rows
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, v: &[bool]) -> Result<Vec<bool>, ModelError> {
        if v.len() != self.cols() {
            return Err(ModelError::LengthMismatch {
                expected: self.cols(),
                got: v.len(),
            });
        }
        let mut out = vec![false; self.rows];
        for (j, &bit) in v.iter().enumerate() {
            if bit {
                for &r in &self.columns[j] {
                    out[r as usize] ^= true;
                }
            }
        }
        Ok(out)
    }
}

fn check_code_parameters(distance: u32, rounds: u32) -> Result<(), ModelError> {
    if distance < 3 || distance % 2 == 0 {
        return Err(ModelError::InvalidDistance(distance));
    }
    if rounds < 1 {
        return Err(ModelError::InvalidRounds(rounds));
    }
    Ok(())
}

/// Phenomenological repetition-code model.
///
/// Each of `rounds` measurement rounds carries `distance - 1` detectors laid
/// out as `round * (distance - 1) + check`. A data flip on qubit `i` in round
/// `r` triggers the adjacent checks of that round; the flip on qubit 0 also
/// crosses the logical cut and flips observable 0. A measurement flip on
/// check `c` in round `r < rounds - 1` triggers the same check in rounds `r`
/// and `r + 1`. Passing `p_meas = 0` omits measurement mechanisms.
pub fn build_repetition_code(
    distance: u32,
    rounds: u32,
    p_data: f64,
    p_meas: f64,
) -> Result<DetectorErrorModel, ModelError> {
    check_code_parameters(distance, rounds)?;
    if !(p_data > 0.0 && p_data < 0.5) {
        return Err(ModelError::ParameterRange {
            name: "p_data",
            value: p_data,
            range: "(0, 0.5)",
        });
    }
    if !(p_meas >= 0.0 && p_meas < 0.5) {
        return Err(ModelError::ParameterRange {
            name: "p_meas",
            value: p_meas,
            range: "[0, 0.5)",
        });
    }
    let checks = (distance - 1) as usize;
    let mut mechanisms = Vec::new();
    for r in 0..rounds {
        let base = r * checks as u32;
        for qubit in 0..distance {
            let mut detectors = Vec::new();
            if qubit > 0 {
                detectors.push(base + qubit - 1);
            }
            if qubit < distance - 1 {
                detectors.push(base + qubit);
            }
            let observables = if qubit == 0 { vec![0] } else { vec![] };
            mechanisms.push(ErrorMechanism::new(p_data, detectors, observables)?.with_round(r));
        }
        if p_meas > 0.0 && r + 1 < rounds {
            for check in 0..checks as u32 {
                let detectors = vec![base + check, base + checks as u32 + check];
                mechanisms.push(ErrorMechanism::new(p_meas, detectors, vec![])?.with_round(r));
            }
        }
    }
    DetectorErrorModel::new(mechanisms, rounds as usize * checks, 1)
}

/// Z-check faces of the rotated surface code, in detector order: interior
/// faces row-major, then left-boundary half faces, then right-boundary half
/// faces. Face `(a, b)` covers data qubits `(a..a+1, b..b+1)`.
fn surface_z_faces(distance: u32) -> Vec<Vec<(u32, u32)>> {
    let d = distance;
    let mut faces = Vec::new();
    for a in 0..d - 1 {
        for b in 0..d - 1 {
            if (a + b) % 2 == 0 {
                faces.push(vec![(a, b), (a, b + 1), (a + 1, b), (a + 1, b + 1)]);
            }
        }
    }
    for a in (1..d - 1).step_by(2) {
        faces.push(vec![(a, 0), (a + 1, 0)]);
    }
    for a in (0..d - 1).step_by(2) {
        faces.push(vec![(a, d - 1), (a + 1, d - 1)]);
    }
    faces
}

/// Phenomenological model for one Pauli sector (Z-type checks) of the rotated
/// surface code.
///
/// Data qubits sit on a `distance x distance` grid; the `(d^2 - 1) / 2`
/// Z checks are the checkerboard plaquettes plus half plaquettes on the left
/// and right boundaries, so every data flip triggers at most two checks and
/// the model is matching-compatible. Top-row data flips cross the logical cut
/// and flip observable 0. Detector layout and measurement flips follow
/// [`build_repetition_code`], with `p` used for both flavors of noise.
pub fn build_surface_code_phenomenological(
    distance: u32,
    rounds: u32,
    p: f64,
) -> Result<DetectorErrorModel, ModelError> {
    check_code_parameters(distance, rounds)?;
    if !(p > 0.0 && p < 0.5) {
        return Err(ModelError::ParameterRange {
            name: "p",
            value: p,
            range: "(0, 0.5)",
        });
    }
    let faces = surface_z_faces(distance);
    let checks = faces.len();
    let mut qubit_faces = vec![Vec::new(); (distance * distance) as usize];
    for (f, face) in faces.iter().enumerate() {
        for &(i, j) in face {
            qubit_faces[(i * distance + j) as usize].push(f as u32);
        }
    }
    let mut mechanisms = Vec::new();
    for r in 0..rounds {
        let base = r * checks as u32;
        for i in 0..distance {
            for j in 0..distance {
                let detectors: Vec<u32> = qubit_faces[(i * distance + j) as usize]
                    .iter()
                    .map(|&f| base + f)
                    .collect();
                let observables = if i == 0 { vec![0] } else { vec![] };
                mechanisms.push(ErrorMechanism::new(p, detectors, observables)?.with_round(r));
            }
        }
        if r + 1 < rounds {
            for check in 0..checks as u32 {
                let detectors = vec![base + check, base + checks as u32 + check];
                mechanisms.push(ErrorMechanism::new(p, detectors, vec![])?.with_round(r));
            }
        }
    }
    DetectorErrorModel::new(mechanisms, rounds as usize * checks, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mech(p: f64, detectors: &[u32], observables: &[u32]) -> ErrorMechanism {
        ErrorMechanism::new(p, detectors.to_vec(), observables.to_vec()).unwrap()
    }

    #[test]
    fn mechanism_validation() {
        assert_eq!(
            ErrorMechanism::new(1.5, vec![0], vec![]),
            Err(ModelError::ProbabilityRange(1.5))
        );
        assert_eq!(
            ErrorMechanism::new(0.1, vec![0, 0], vec![]),
            Err(ModelError::DuplicateIndex {
                kind: "detector",
                index: 0
            })
        );
        assert_eq!(
            ErrorMechanism::new(0.1, vec![], vec![]),
            Err(ModelError::EmptyMechanism)
        );
        // Observable-only mechanisms are allowed.
        assert!(ErrorMechanism::new(0.1, vec![], vec![0]).is_ok());
        // Unsorted input is normalized.
        assert_eq!(mech(0.1, &[2, 0], &[]).detectors, vec![0, 2]);
    }

    #[test]
    fn canonicalize_merges_duplicates() {
        let model = DetectorErrorModel::from_mechanisms(vec![
            mech(0.1, &[0], &[]),
            mech(0.1, &[0], &[]),
        ]);
        let canon = model.canonicalize();
        assert_eq!(canon.num_mechanisms(), 1);
        assert_relative_eq!(canon.mechanisms()[0].probability, 0.18, max_relative = 1e-15);
        assert!(canon.is_canonical());
    }

    #[test]
    fn canonicalize_keeps_distinct_mechanisms() {
        let model = DetectorErrorModel::from_mechanisms(vec![
            mech(0.1, &[0], &[]),
            mech(0.1, &[1], &[]),
        ]);
        assert_eq!(model.canonicalize().num_mechanisms(), 2);
    }

    #[test]
    fn canonicalize_half_is_fixed_point() {
        let model = DetectorErrorModel::from_mechanisms(vec![
            mech(0.5, &[0], &[]),
            mech(0.5, &[0], &[]),
        ]);
        let canon = model.canonicalize();
        assert_eq!(canon.num_mechanisms(), 1);
        assert_relative_eq!(canon.mechanisms()[0].probability, 0.5);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let model = DetectorErrorModel::from_mechanisms(vec![
            mech(0.1, &[0], &[0]),
            mech(0.2, &[0, 1], &[]),
            mech(0.3, &[0], &[0]),
            mech(0.05, &[1], &[]),
        ]);
        let once = model.canonicalize();
        assert_eq!(once, once.canonicalize());
    }

    #[test]
    fn repetition_code_single_round() {
        let model = build_repetition_code(3, 1, 0.1, 0.0).unwrap();
        assert_eq!(model.num_mechanisms(), 3);
        assert_eq!(model.num_detectors(), 2);
        assert_eq!(model.num_observables(), 1);
        assert_eq!(model.mechanisms()[0].detectors, vec![0]);
        assert_eq!(model.mechanisms()[0].observables, vec![0]);
        assert_eq!(model.mechanisms()[1].detectors, vec![0, 1]);
        assert!(model.mechanisms()[1].observables.is_empty());
        assert_eq!(model.mechanisms()[2].detectors, vec![1]);
        assert_eq!(model.mechanisms()[0].round, Some(0));
    }

    #[test]
    fn repetition_code_two_rounds() {
        let model = build_repetition_code(3, 2, 0.1, 0.1).unwrap();
        assert_eq!(model.num_mechanisms(), 8);
        assert_eq!(model.num_detectors(), 4);
        // Measurement mechanism on check 0 links the same check across rounds.
        let meas: Vec<_> = model
            .mechanisms()
            .iter()
            .filter(|m| m.detectors.len() == 2 && m.detectors[1] - m.detectors[0] == 2)
            .collect();
        assert_eq!(meas.len(), 2);
        assert_eq!(meas[0].detectors, vec![0, 2]);
        assert_eq!(meas[0].round, Some(0));
    }

    #[test]
    fn repetition_code_rejects_bad_parameters() {
        assert!(matches!(
            build_repetition_code(2, 1, 0.1, 0.1),
            Err(ModelError::InvalidDistance(2))
        ));
        assert!(matches!(
            build_repetition_code(3, 0, 0.1, 0.1),
            Err(ModelError::InvalidRounds(0))
        ));
        assert!(build_repetition_code(3, 1, 0.6, 0.1).is_err());
    }

    #[test]
    fn check_matrices_repetition() {
        let model = build_repetition_code(3, 1, 0.1, 0.0).unwrap();
        let (h, obs) = model.check_matrices();
        assert_eq!((h.rows(), h.cols()), (2, 3));
        assert_eq!(h.column(0), &[0]);
        assert_eq!(h.column(1), &[0, 1]);
        assert_eq!(h.column(2), &[1]);
        assert_eq!((obs.rows(), obs.cols()), (1, 3));
        assert_eq!(obs.column(0), &[0]);
        assert!(obs.column(1).is_empty());
        assert!(obs.column(2).is_empty());
    }

    #[test]
    fn check_matrices_degenerate_cases() {
        let empty = DetectorErrorModel::from_mechanisms(vec![]);
        let (h, obs) = empty.check_matrices();
        assert_eq!((h.rows(), h.cols()), (0, 0));
        assert_eq!((obs.rows(), obs.cols()), (0, 0));

        let single = DetectorErrorModel::from_mechanisms(vec![mech(0.2, &[0], &[0])]);
        let (h, obs) = single.check_matrices();
        assert_eq!((h.rows(), h.cols()), (1, 1));
        assert_eq!(h.column(0), &[0]);
        assert_eq!(obs.column(0), &[0]);
    }

    #[test]
    fn repetition_logical_operator_is_undetectable() {
        for d in [3u32, 5, 7] {
            let model = build_repetition_code(d, 1, 0.1, 0.0).unwrap();
            let (h, obs) = model.check_matrices();
            let all_ones = vec![true; model.num_mechanisms()];
            assert!(h.mul_vec(&all_ones).unwrap().iter().all(|&b| !b));
            assert_eq!(obs.mul_vec(&all_ones).unwrap(), vec![true]);
        }
    }

    // Hand-drawn d=3 rotated layout: interior Z faces at (0,0) and (1,1),
    // half faces on the left (rows 1-2) and right (rows 0-1) edges.
    #[test]
    fn surface_code_d3_matches_hand_layout() {
        let model = build_surface_code_phenomenological(3, 1, 0.1).unwrap();
        assert_eq!(model.num_detectors(), 4);
        assert_eq!(model.num_observables(), 1);
        assert_eq!(model.num_mechanisms(), 9);
        let expected: [(&[u32], bool); 9] = [
            (&[0], true),     // (0,0)
            (&[0], true),     // (0,1)
            (&[3], true),     // (0,2)
            (&[0, 2], false), // (1,0)
            (&[0, 1], false), // (1,1)
            (&[1, 3], false), // (1,2)
            (&[2], false),    // (2,0)
            (&[1], false),    // (2,1)
            (&[1], false),    // (2,2)
        ];
        for (mech, (dets, flips)) in model.mechanisms().iter().zip(expected) {
            assert_eq!(mech.detectors, dets);
            assert_eq!(!mech.observables.is_empty(), flips);
        }
    }

    #[test]
    fn surface_code_is_matching_compatible() {
        for d in [3u32, 5] {
            let model = build_surface_code_phenomenological(d, 2, 0.05).unwrap();
            assert_eq!(
                model.num_detectors(),
                2 * ((d * d - 1) / 2) as usize
            );
            let mut boundary = 0;
            for mech in model.mechanisms() {
                assert!(!mech.detectors.is_empty() && mech.detectors.len() <= 2);
                if mech.detectors.len() == 1 {
                    boundary += 1;
                }
            }
            assert!(boundary >= 2);
        }
    }

    #[test]
    fn surface_code_vertical_chain_is_logical() {
        for d in [3u32, 5] {
            let model = build_surface_code_phenomenological(d, 1, 0.1).unwrap();
            let (h, obs) = model.check_matrices();
            for j in 0..d {
                let mut chain = vec![false; model.num_mechanisms()];
                for i in 0..d {
                    chain[(i * d + j) as usize] = true;
                }
                assert!(h.mul_vec(&chain).unwrap().iter().all(|&b| !b));
                assert_eq!(obs.mul_vec(&chain).unwrap(), vec![true]);
            }
        }
    }

    #[test]
    fn surface_code_rejects_small_distance() {
        assert!(matches!(
            build_surface_code_phenomenological(1, 1, 0.1),
            Err(ModelError::InvalidDistance(1))
        ));
    }

    #[test]
    fn out_of_range_reference_rejected() {
        let err = DetectorErrorModel::new(vec![mech(0.1, &[5], &[])], 2, 0).unwrap_err();
        assert!(matches!(err, ModelError::IndexOutOfRange { index: 5, .. }));
    }
}
