//! Exact minimum-weight perfect matching on a decoding graph.
//!
//! Detectors are graph nodes, mechanisms are edges (single-detector
//! mechanisms connect to a virtual boundary node), and edge weights are
//! `ln(1/p - 1)`. Triggered detectors are paired up, each pair either with
//! one another or with the boundary, minimizing total shortest-path weight;
//! the correction is the symmetric difference of the mechanisms along the
//! matched paths. Pairings are optimized exactly by dynamic programming over
//! subsets of triggered detectors, which caps the number of triggered
//! detectors a single shot may carry.

use crate::error_model::DetectorErrorModel;

use super::{Correction, DecodeError, Decoder, Priors};

/// Log-likelihood weight of an elementary error: `ln(1/p - 1)`, strictly
/// positive and decreasing on (0, 0.5).
pub fn edge_weight(p: f64) -> Result<f64, DecodeError> {
    if !(p > 0.0 && p < 0.5) {
        return Err(DecodeError::InvalidPrior {
            value: p,
            range: "(0, 0.5)",
        });
    }
    Ok((1.0 / p - 1.0).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwpmConfig {
    /// Hard cap on triggered detectors per shot; denser syndromes error out
    /// and the harness counts them as rejections.
    pub max_triggered: usize,
}

impl Default for MwpmConfig {
    fn default() -> Self {
        Self { max_triggered: 16 }
    }
}

/// Decoding graph with precomputed all-pairs shortest paths.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    num_detectors: usize,
    num_mechanisms: usize,
    /// Dense (n+1)^2 distance matrix; node `num_detectors` is the boundary.
    dist: Vec<f64>,
    /// First hop of the shortest path: (next node, mechanism), row-major.
    step: Vec<Option<(u32, u32)>>,
    max_triggered: usize,
}

// Mechanism endpoints: every mechanism maps to exactly one edge.
fn mechanism_endpoints(model: &DetectorErrorModel) -> Result<Vec<(usize, usize)>, DecodeError> {
    let boundary = model.num_detectors();
    model
        .mechanisms()
        .iter()
        .enumerate()
        .map(|(q, mech)| match *mech.detectors.as_slice() {
            [a] => Ok((a as usize, boundary)),
            [a, b] => Ok((a as usize, b as usize)),
            _ => Err(DecodeError::NotMatchable {
                mechanism: q,
                detectors: mech.detectors.len(),
            }),
        })
        .collect()
}

fn build_graph_from_parts(
    endpoints: &[(usize, usize)],
    priors: &Priors,
    num_detectors: usize,
    max_triggered: usize,
) -> Result<MatchingGraph, DecodeError> {
    let n = num_detectors + 1;
    let mut dist = vec![f64::INFINITY; n * n];
    let mut step: Vec<Option<(u32, u32)>> = vec![None; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
    }
    for (q, &(a, b)) in endpoints.iter().enumerate() {
        let w = edge_weight(priors[q])?;
        // Parallel edges: keep the lightest, ties to the lower mechanism id.
        if w < dist[a * n + b] {
            dist[a * n + b] = w;
            dist[b * n + a] = w;
            step[a * n + b] = Some((b as u32, q as u32));
            step[b * n + a] = Some((a as u32, q as u32));
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let candidate = dik + dist[k * n + j];
                if candidate < dist[i * n + j] {
                    dist[i * n + j] = candidate;
                    step[i * n + j] = step[i * n + k];
                }
            }
        }
    }
    Ok(MatchingGraph {
        num_detectors,
        num_mechanisms: endpoints.len(),
        dist,
        step,
        max_triggered,
    })
}

/// Builds the decoding graph for a model under the given priors.
///
/// Errors on mechanisms triggering zero or three-plus detectors and on
/// priors outside (0, 0.5).
pub fn build_matching_graph(
    model: &DetectorErrorModel,
    priors: &Priors,
) -> Result<MatchingGraph, DecodeError> {
    if priors.len() != model.num_mechanisms() {
        return Err(DecodeError::LengthMismatch {
            expected: model.num_mechanisms(),
            got: priors.len(),
        });
    }
    let endpoints = mechanism_endpoints(model)?;
    build_graph_from_parts(
        &endpoints,
        priors,
        model.num_detectors(),
        MwpmConfig::default().max_triggered,
    )
}

impl MatchingGraph {
    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn with_cap(mut self, max_triggered: usize) -> Self {
        self.max_triggered = max_triggered;
        self
    }

    fn distance(&self, u: usize, v: usize) -> f64 {
        self.dist[u * (self.num_detectors + 1) + v]
    }

    // XORs the mechanisms of the shortest u-v path into the correction.
    fn apply_path(&self, mut u: usize, v: usize, bits: &mut [bool]) {
        let n = self.num_detectors + 1;
        while u != v {
            let (next, mech) = self.step[u * n + v].expect("matched nodes are connected");
            bits[mech as usize] ^= true;
            u = next as usize;
        }
    }
}

/// Pairs up the triggered detectors (and the boundary) with minimum total
/// weight and returns the correction along the matched paths.
pub fn decode_mwpm(graph: &MatchingGraph, syndrome: &[bool]) -> Result<Correction, DecodeError> {
    if syndrome.len() != graph.num_detectors {
        return Err(DecodeError::LengthMismatch {
            expected: graph.num_detectors,
            got: syndrome.len(),
        });
    }
    let triggered: Vec<usize> = syndrome
        .iter()
        .enumerate()
        .filter_map(|(d, &bit)| bit.then_some(d))
        .collect();
    if triggered.len() > graph.max_triggered {
        return Err(DecodeError::SyndromeTooDense {
            triggered: triggered.len(),
            cap: graph.max_triggered,
        });
    }
    let boundary = graph.num_detectors;
    for &d in &triggered {
        if graph.distance(d, boundary).is_infinite()
            && triggered
                .iter()
                .all(|&other| other == d || graph.distance(d, other).is_infinite())
        {
            return Err(DecodeError::Unsolvable);
        }
    }

    let k = triggered.len();
    let mut bits = vec![false; graph.num_mechanisms];
    if k > 0 {
        // best[mask]: minimum weight to pair up the triggered detectors in
        // `mask`; each step resolves the lowest set bit against the boundary
        // or against another member.
        let full = (1usize << k) - 1;
        let mut best = vec![f64::INFINITY; full + 1];
        let mut choice = vec![usize::MAX; full + 1];
        best[0] = 0.0;
        for mask in 1..=full {
            let first = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << first);
            let mut w = graph.distance(triggered[first], boundary) + best[rest];
            let mut pick = first;
            let mut others = rest;
            while others != 0 {
                let second = others.trailing_zeros() as usize;
                others &= others - 1;
                let candidate = graph.distance(triggered[first], triggered[second])
                    + best[rest & !(1 << second)];
                if candidate < w {
                    w = candidate;
                    pick = second;
                }
            }
            best[mask] = w;
            choice[mask] = pick;
        }
        if best[full].is_infinite() {
            return Err(DecodeError::Unsolvable);
        }
        let mut mask = full;
        while mask != 0 {
            let first = mask.trailing_zeros() as usize;
            let pick = choice[mask];
            if pick == first {
                graph.apply_path(triggered[first], boundary, &mut bits);
                mask &= !(1 << first);
            } else {
                graph.apply_path(triggered[first], triggered[pick], &mut bits);
                mask &= !((1 << first) | (1 << pick));
            }
        }
    }
    Ok(Correction(bits))
}

/// Matching decoder that rebuilds edge weights from the priors of each call;
/// the graph for the most recent priors is cached, so repeated first-round
/// decodes under the base error model pay for shortest paths once.
pub struct MwpmDecoder {
    endpoints: Vec<(usize, usize)>,
    num_detectors: usize,
    config: MwpmConfig,
    cached: Option<(Vec<f64>, MatchingGraph)>,
}

impl MwpmDecoder {
    pub fn new(model: &DetectorErrorModel, config: MwpmConfig) -> Result<Self, DecodeError> {
        let endpoints = mechanism_endpoints(model)?;
        Ok(Self {
            endpoints,
            num_detectors: model.num_detectors(),
            config,
            cached: None,
        })
    }
}

impl Decoder for MwpmDecoder {
    fn decode(&mut self, priors: &Priors, syndrome: &[bool]) -> Result<Correction, DecodeError> {
        if priors.len() != self.endpoints.len() {
            return Err(DecodeError::LengthMismatch {
                expected: self.endpoints.len(),
                got: priors.len(),
            });
        }
        let rebuild = match &self.cached {
            Some((cached_priors, _)) => cached_priors.as_slice() != &**priors,
            None => true,
        };
        if rebuild {
            let graph = build_graph_from_parts(
                &self.endpoints,
                priors,
                self.num_detectors,
                self.config.max_triggered,
            )?;
            self.cached = Some((priors.to_vec(), graph));
        }
        let graph = &self.cached.as_ref().unwrap().1;
        let correction = decode_mwpm(graph, syndrome)?;
        // Matched paths flip exactly the paired detectors, but verify the
        // postcondition against the real endpoints anyway.
        let mut check = vec![false; syndrome.len()];
        for q in correction.support() {
            let (a, b) = self.endpoints[q];
            check[a] ^= true;
            if b < syndrome.len() {
                check[b] ^= true;
            }
        }
        assert_eq!(check, syndrome, "matching correction violates H c = s");
        Ok(correction)
    }
}
