//! Min-sum belief propagation on the Tanner graph of a check matrix, with an
//! ordered-statistics fallback when message passing does not converge.

use crate::error_model::{DetectorErrorModel, SparseBinaryMatrix};

use super::osd::decode_osd0;
use super::{Correction, DecodeError, Decoder, Priors};

/// Belief-propagation settings. Defaults: 200 iterations, min-sum scaling
/// factor 1.0, parallel (flooding) schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct BpConfig {
    pub max_iterations: usize,
    pub scaling_factor: f64,
    pub serial_schedule: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            scaling_factor: 1.0,
            serial_schedule: false,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.max_iterations < 1 {
            return Err(DecodeError::InvalidConfig(
                "max_iterations must be >= 1".into(),
            ));
        }
        if !(self.scaling_factor > 0.0 && self.scaling_factor <= 1.0) {
            return Err(DecodeError::InvalidConfig(format!(
                "scaling_factor {} outside (0, 1]",
                self.scaling_factor
            )));
        }
        Ok(())
    }
}

/// Soft and hard output of one belief-propagation run.
#[derive(Debug, Clone)]
pub struct BpOutcome {
    /// Posterior log-likelihood ratios ln(P(bit = 0) / P(bit = 1)).
    pub llrs: Vec<f64>,
    pub hard: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
}

// Tanner graph in edge-list form. Edges are grouped by check; `var_edges`
// regroups the same edge ids by variable.
struct TannerGraph {
    num_checks: usize,
    num_vars: usize,
    check_start: Vec<u32>,
    edge_var: Vec<u32>,
    var_start: Vec<u32>,
    var_edges: Vec<u32>,
}

impl TannerGraph {
    fn new(h: &SparseBinaryMatrix) -> Self {
        let num_checks = h.rows();
        let num_vars = h.cols();
        let rows = h.row_adjacency();
        let mut check_start = Vec::with_capacity(num_checks + 1);
        let mut edge_var = Vec::new();
        check_start.push(0);
        for row in &rows {
            edge_var.extend_from_slice(row);
            check_start.push(edge_var.len() as u32);
        }
        let mut var_degree = vec![0u32; num_vars];
        for &v in &edge_var {
            var_degree[v as usize] += 1;
        }
        let mut var_start = Vec::with_capacity(num_vars + 1);
        var_start.push(0u32);
        for v in 0..num_vars {
            var_start.push(var_start[v] + var_degree[v]);
        }
        let mut cursor = var_start.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[cursor[v as usize] as usize] = e as u32;
            cursor[v as usize] += 1;
        }
        Self {
            num_checks,
            num_vars,
            check_start,
            edge_var,
            var_start,
            var_edges,
        }
    }

    fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_start[c] as usize..self.check_start[c + 1] as usize
    }
}

struct BpScratch {
    check_msg: Vec<f64>,
    var_msg: Vec<f64>,
    prev_check_msg: Vec<f64>,
    prev2_check_msg: Vec<f64>,
    posterior: Vec<f64>,
    hard: Vec<bool>,
}

impl BpScratch {
    fn new(graph: &TannerGraph) -> Self {
        let edges = graph.edge_var.len();
        Self {
            check_msg: vec![0.0; edges],
            var_msg: vec![0.0; edges],
            prev_check_msg: vec![0.0; edges],
            prev2_check_msg: vec![0.0; edges],
            posterior: vec![0.0; graph.num_vars],
            hard: vec![false; graph.num_vars],
        }
    }
}

fn prior_llr(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

// Degree-1 checks produce an "exclude the only neighbor" minimum of infinity;
// capping keeps the message finite so downstream sums never hit inf - inf.
const MSG_CAP: f64 = 1e12;

// Parallel min-sum is a deterministic map on the message vector, so a state
// seen twice can never converge later; bail out as soon as the messages
// repeat with period one or two.
fn run_bp(
    graph: &TannerGraph,
    scratch: &mut BpScratch,
    priors: &[f64],
    syndrome: &[bool],
    config: &BpConfig,
) -> (bool, usize) {
    let s = scratch;
    for (v, &p) in priors.iter().enumerate() {
        s.posterior[v] = prior_llr(p);
    }
    s.check_msg.fill(0.0);
    // Hard decision from the priors alone; a zero syndrome with sub-half
    // priors converges here without any message passing.
    for v in 0..graph.num_vars {
        s.hard[v] = s.posterior[v] < 0.0;
    }
    if syndrome_satisfied(graph, &s.hard, syndrome) {
        return (true, 0);
    }
    if config.serial_schedule {
        run_bp_serial(graph, s, priors, syndrome, config)
    } else {
        run_bp_parallel(graph, s, priors, syndrome, config)
    }
}

fn run_bp_parallel(
    graph: &TannerGraph,
    s: &mut BpScratch,
    priors: &[f64],
    syndrome: &[bool],
    config: &BpConfig,
) -> (bool, usize) {
    let alpha = config.scaling_factor;
    for iteration in 1..=config.max_iterations {
        // Variable pass: var_msg[e] = posterior[v] - check_msg[e], with the
        // posterior rebuilt from the current check messages.
        for (v, &p) in priors.iter().enumerate() {
            let mut total = prior_llr(p);
            let lo = graph.var_start[v] as usize;
            let hi = graph.var_start[v + 1] as usize;
            for &e in &graph.var_edges[lo..hi] {
                total += s.check_msg[e as usize];
            }
            s.posterior[v] = total;
            for &e in &graph.var_edges[lo..hi] {
                s.var_msg[e as usize] = total - s.check_msg[e as usize];
            }
        }
        std::mem::swap(&mut s.prev2_check_msg, &mut s.prev_check_msg);
        std::mem::swap(&mut s.prev_check_msg, &mut s.check_msg);
        // Check pass: normalized min-sum with the two-minimum trick.
        for c in 0..graph.num_checks {
            let range = graph.check_edges(c);
            let mut sign = if syndrome[c] { -1.0f64 } else { 1.0 };
            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut argmin = usize::MAX;
            for e in range.clone() {
                let m = s.var_msg[e];
                if m < 0.0 {
                    sign = -sign;
                }
                let mag = m.abs();
                if mag < min1 {
                    min2 = min1;
                    min1 = mag;
                    argmin = e;
                } else if mag < min2 {
                    min2 = mag;
                }
            }
            for e in range {
                let m = s.var_msg[e];
                let excl_sign = if m < 0.0 { -sign } else { sign };
                let excl_min = if e == argmin { min2 } else { min1 };
                s.check_msg[e] = alpha * excl_sign * excl_min.min(MSG_CAP);
            }
        }
        // Decision and convergence test.
        for v in 0..graph.num_vars {
            let mut total = prior_llr(priors[v]);
            let lo = graph.var_start[v] as usize;
            let hi = graph.var_start[v + 1] as usize;
            for &e in &graph.var_edges[lo..hi] {
                total += s.check_msg[e as usize];
            }
            s.posterior[v] = total;
            s.hard[v] = total < 0.0;
        }
        if syndrome_satisfied(graph, &s.hard, syndrome) {
            return (true, iteration);
        }
        if iteration >= 2 && (s.check_msg == s.prev_check_msg || s.check_msg == s.prev2_check_msg)
        {
            return (false, iteration);
        }
    }
    (false, config.max_iterations)
}

fn run_bp_serial(
    graph: &TannerGraph,
    s: &mut BpScratch,
    priors: &[f64],
    syndrome: &[bool],
    config: &BpConfig,
) -> (bool, usize) {
    let alpha = config.scaling_factor;
    for (v, &p) in priors.iter().enumerate() {
        s.posterior[v] = prior_llr(p);
    }
    for iteration in 1..=config.max_iterations {
        s.prev_check_msg.copy_from_slice(&s.check_msg);
        for c in 0..graph.num_checks {
            let range = graph.check_edges(c);
            let mut sign = if syndrome[c] { -1.0f64 } else { 1.0 };
            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut argmin = usize::MAX;
            for e in range.clone() {
                let v = graph.edge_var[e] as usize;
                let m = s.posterior[v] - s.check_msg[e];
                s.var_msg[e] = m;
                if m < 0.0 {
                    sign = -sign;
                }
                let mag = m.abs();
                if mag < min1 {
                    min2 = min1;
                    min1 = mag;
                    argmin = e;
                } else if mag < min2 {
                    min2 = mag;
                }
            }
            for e in range {
                let m = s.var_msg[e];
                let excl_sign = if m < 0.0 { -sign } else { sign };
                let excl_min = if e == argmin { min2 } else { min1 };
                let new_msg = alpha * excl_sign * excl_min.min(MSG_CAP);
                let v = graph.edge_var[e] as usize;
                s.posterior[v] = m + new_msg;
                s.check_msg[e] = new_msg;
            }
        }
        for v in 0..graph.num_vars {
            s.hard[v] = s.posterior[v] < 0.0;
        }
        if syndrome_satisfied(graph, &s.hard, syndrome) {
            return (true, iteration);
        }
        if s.check_msg == s.prev_check_msg {
            return (false, iteration);
        }
    }
    (false, config.max_iterations)
}

fn syndrome_satisfied(graph: &TannerGraph, hard: &[bool], syndrome: &[bool]) -> bool {
    for c in 0..graph.num_checks {
        let mut parity = false;
        for e in graph.check_edges(c) {
            parity ^= hard[graph.edge_var[e] as usize];
        }
        if parity != syndrome[c] {
            return false;
        }
    }
    true
}

/// One-shot min-sum run over the Tanner graph of `h`.
pub fn decode_bp(
    h: &SparseBinaryMatrix,
    priors: &Priors,
    syndrome: &[bool],
    config: &BpConfig,
) -> Result<BpOutcome, DecodeError> {
    config.validate()?;
    check_dimensions(h, priors, syndrome)?;
    let graph = TannerGraph::new(h);
    let mut scratch = BpScratch::new(&graph);
    let (converged, iterations) = run_bp(&graph, &mut scratch, priors, syndrome, config);
    Ok(BpOutcome {
        llrs: scratch.posterior,
        hard: scratch.hard,
        converged,
        iterations,
    })
}

/// Belief propagation with ordered-statistics fallback: returns the BP hard
/// decision when it satisfies the syndrome, otherwise the order-0 OSD
/// solution seeded with the BP soft output.
pub fn decode_bp_osd(
    h: &SparseBinaryMatrix,
    priors: &Priors,
    syndrome: &[bool],
    config: &BpConfig,
) -> Result<Correction, DecodeError> {
    let outcome = decode_bp(h, priors, syndrome, config)?;
    if outcome.converged {
        return Ok(Correction(outcome.hard));
    }
    decode_osd0(&outcome.llrs, syndrome, h)
}

fn check_dimensions(
    h: &SparseBinaryMatrix,
    priors: &Priors,
    syndrome: &[bool],
) -> Result<(), DecodeError> {
    if priors.len() != h.cols() {
        return Err(DecodeError::LengthMismatch {
            expected: h.cols(),
            got: priors.len(),
        });
    }
    if syndrome.len() != h.rows() {
        return Err(DecodeError::LengthMismatch {
            expected: h.rows(),
            got: syndrome.len(),
        });
    }
    Ok(())
}

/// Reusable BP+OSD decoder holding the Tanner graph and message scratch for
/// one worker.
pub struct BpOsdDecoder {
    h: SparseBinaryMatrix,
    graph: TannerGraph,
    scratch: BpScratch,
    config: BpConfig,
}

impl BpOsdDecoder {
    pub fn new(model: &DetectorErrorModel, config: BpConfig) -> Result<Self, DecodeError> {
        config.validate()?;
        let h = model.check_matrix();
        let graph = TannerGraph::new(&h);
        let scratch = BpScratch::new(&graph);
        Ok(Self {
            h,
            graph,
            scratch,
            config,
        })
    }
}

impl Decoder for BpOsdDecoder {
    fn decode(&mut self, priors: &Priors, syndrome: &[bool]) -> Result<Correction, DecodeError> {
        check_dimensions(&self.h, priors, syndrome)?;
        let (converged, _) = run_bp(&self.graph, &mut self.scratch, priors, syndrome, &self.config);
        if converged {
            // Convergence is defined as the hard decision satisfying the
            // syndrome, so the postcondition holds by construction.
            return Ok(Correction(self.scratch.hard.clone()));
        }
        decode_osd0(&self.scratch.posterior, syndrome, &self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::DetectorErrorModel;
    use crate::error_model::ErrorMechanism;

    fn tree_model() -> DetectorErrorModel {
        DetectorErrorModel::from_mechanisms(vec![
            ErrorMechanism::new(0.2, vec![0], vec![]).unwrap(),
            ErrorMechanism::new(0.3, vec![0, 1], vec![]).unwrap(),
            ErrorMechanism::new(0.25, vec![1], vec![]).unwrap(),
        ])
    }

    #[test]
    fn tree_syndrome_decodes_to_most_likely_configuration() {
        // Two configurations explain syndrome (1,0): {q0} with probability
        // 0.2*0.7*0.75 = 0.105 and {q1,q2} with 0.8*0.3*0.25 = 0.060. Min-sum
        // is exact on trees, so the hard decision is (1,0,0).
        let model = tree_model();
        let h = model.check_matrix();
        let priors = Priors::from_model(&model);
        for serial in [false, true] {
            let config = BpConfig {
                serial_schedule: serial,
                ..BpConfig::default()
            };
            let out = decode_bp(&h, &priors, &[true, false], &config).unwrap();
            assert!(out.converged);
            assert_eq!(out.hard, vec![true, false, false]);
        }
    }

    #[test]
    fn zero_syndrome_converges_immediately() {
        let model = tree_model();
        let h = model.check_matrix();
        let priors = Priors::from_model(&model);
        let out = decode_bp(&h, &priors, &[false, false], &BpConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 1);
        assert_eq!(out.hard, vec![false, false, false]);
    }

    #[test]
    fn inconsistent_syndrome_never_converges() {
        // The only mechanism triggers both detectors, so syndrome (1,0) has
        // no explanation at all.
        let model = DetectorErrorModel::from_mechanisms(vec![ErrorMechanism::new(
            0.1,
            vec![0, 1],
            vec![],
        )
        .unwrap()]);
        let h = model.check_matrix();
        let priors = Priors::from_model(&model);
        let config = BpConfig {
            max_iterations: 1,
            ..BpConfig::default()
        };
        let out = decode_bp(&h, &priors, &[true, false], &config).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn bp_osd_handles_symmetric_stall() {
        // Two parallel mechanisms on the same pair of checks with equal
        // priors: min-sum cannot break the tie, OSD does, and the output
        // still satisfies the syndrome.
        let model = DetectorErrorModel::from_mechanisms(vec![
            ErrorMechanism::new(0.1, vec![0, 1], vec![0]).unwrap(),
            ErrorMechanism::new(0.1, vec![0, 1], vec![]).unwrap(),
        ]);
        let h = model.check_matrix();
        let priors = Priors::from_model(&model);
        let syndrome = [true, true];
        let c = decode_bp_osd(&h, &priors, &syndrome, &BpConfig::default()).unwrap();
        assert_eq!(h.mul_vec(&c.0).unwrap(), syndrome.to_vec());
        assert_eq!(c.weight(), 1);
    }

    #[test]
    fn bp_osd_satisfies_syndrome_at_tiny_iteration_cap() {
        let model = DetectorErrorModel::from_mechanisms(vec![
            ErrorMechanism::new(0.1, vec![0, 1], vec![]).unwrap(),
            ErrorMechanism::new(0.1, vec![1, 2], vec![]).unwrap(),
            ErrorMechanism::new(0.1, vec![0, 2], vec![]).unwrap(),
        ]);
        let h = model.check_matrix();
        let priors = Priors::from_model(&model);
        let config = BpConfig {
            max_iterations: 2,
            ..BpConfig::default()
        };
        for s in [[true, true, false], [true, false, true], [false, true, true]] {
            let c = decode_bp_osd(&h, &priors, &s, &config).unwrap();
            assert_eq!(h.mul_vec(&c.0).unwrap(), s.to_vec());
        }
    }

    #[test]
    fn decoder_instance_matches_free_function() {
        let model = crate::error_model::build_repetition_code(5, 3, 0.08, 0.08).unwrap();
        let h = model.check_matrix();
        let priors = Priors::from_model(&model);
        let mut decoder = BpOsdDecoder::new(&model, BpConfig::default()).unwrap();
        for i in 0..200 {
            let shot = crate::sampler::sample_shot(&model, 21, i);
            let a = decoder.decode(&priors, &shot.syndrome).unwrap();
            let b = decode_bp_osd(&h, &priors, &shot.syndrome, &BpConfig::default()).unwrap();
            assert_eq!(a, b);
            assert_eq!(h.mul_vec(&a.0).unwrap(), shot.syndrome);
        }
    }

    #[test]
    fn config_validation() {
        assert!(BpConfig {
            max_iterations: 0,
            ..BpConfig::default()
        }
        .validate()
        .is_err());
        assert!(BpConfig {
            scaling_factor: 1.5,
            ..BpConfig::default()
        }
        .validate()
        .is_err());
    }
}
