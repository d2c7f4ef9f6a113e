//! Line-oriented text format for detector error models.
//!
//! ```text
//! # comment
//! detector_count 2
//! observable_count 1
//! error(0.1) D0 L0
//! error(0.1) D0 D1
//! ```
//!
//! Each `error(p)` instruction lists the detectors (`D<n>`) and logical
//! observables (`L<n>`) flipped by one independent mechanism. Counts default
//! to one past the largest referenced index when not declared. Parsed
//! mechanisms are tagged round 0; the format carries no round information.

use std::fmt;

use thiserror::Error;

use crate::error_model::{DetectorErrorModel, ErrorMechanism};

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {kind}")]
pub struct DemParseError {
    pub line: usize,
    pub column: usize,
    pub kind: DemErrorKind,
}

#[derive(Debug, PartialEq)]
pub enum DemErrorKind {
    UnknownInstruction(String),
    MalformedProbability,
    ProbabilityRange(f64),
    MissingTargets,
    InvalidTarget(String),
    DuplicateTarget(String),
    MalformedCount,
    DuplicateDeclaration(&'static str),
    IndexExceedsDeclared {
        kind: &'static str,
        index: u32,
        declared: usize,
    },
}

impl fmt::Display for DemErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownInstruction(s) => write!(f, "unknown instruction `{s}`"),
            Self::MalformedProbability => write!(f, "expected `error(<probability>)`"),
            Self::ProbabilityRange(p) => write!(f, "probability {p} outside (0, 1)"),
            Self::MissingTargets => write!(f, "error instruction lists no targets"),
            Self::InvalidTarget(s) => write!(f, "invalid target `{s}` (expected D<n> or L<n>)"),
            Self::DuplicateTarget(s) => write!(f, "duplicate target `{s}`"),
            Self::MalformedCount => write!(f, "expected a non-negative integer count"),
            Self::DuplicateDeclaration(name) => write!(f, "duplicate `{name}` declaration"),
            Self::IndexExceedsDeclared {
                kind,
                index,
                declared,
            } => write!(
                f,
                "{kind} index {index} exceeds declared count {declared}"
            ),
        }
    }
}

fn err(line: usize, column: usize, kind: DemErrorKind) -> DemParseError {
    DemParseError { line, column, kind }
}

/// Parses the text format into a model. Mechanisms appear in file order.
pub fn parse_dem(text: &str) -> Result<DetectorErrorModel, DemParseError> {
    let mut mechanisms: Vec<ErrorMechanism> = Vec::new();
    let mut mechanism_lines: Vec<usize> = Vec::new();
    let mut declared_detectors: Option<(usize, usize)> = None;
    let mut declared_observables: Option<(usize, usize)> = None;

    for (line_idx, raw) in text.lines().enumerate() {
        let lineno = line_idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let column = raw.len() - raw.trim_start().len() + 1;
        if let Some(rest) = line.strip_prefix("detector_count") {
            if declared_detectors.is_some() {
                return Err(err(
                    lineno,
                    column,
                    DemErrorKind::DuplicateDeclaration("detector_count"),
                ));
            }
            declared_detectors = Some((parse_count(rest, lineno, column)?, lineno));
        } else if let Some(rest) = line.strip_prefix("observable_count") {
            if declared_observables.is_some() {
                return Err(err(
                    lineno,
                    column,
                    DemErrorKind::DuplicateDeclaration("observable_count"),
                ));
            }
            declared_observables = Some((parse_count(rest, lineno, column)?, lineno));
        } else if line.starts_with("error") {
            mechanisms.push(parse_error_instruction(line, lineno, column)?);
            mechanism_lines.push(lineno);
        } else {
            let word = line.split_whitespace().next().unwrap_or(line);
            return Err(err(
                lineno,
                column,
                DemErrorKind::UnknownInstruction(word.to_string()),
            ));
        }
    }

    let max_detector = mechanisms
        .iter()
        .filter_map(|m| m.detectors.last().copied())
        .max();
    let max_observable = mechanisms
        .iter()
        .filter_map(|m| m.observables.last().copied())
        .max();
    let num_detectors =
        resolve_count(declared_detectors, max_detector, "detector", &mechanisms, &mechanism_lines)?;
    let num_observables = resolve_count(
        declared_observables,
        max_observable,
        "observable",
        &mechanisms,
        &mechanism_lines,
    )?;
    Ok(DetectorErrorModel::new(mechanisms, num_detectors, num_observables)
        .expect("counts cover all referenced indices"))
}

fn resolve_count(
    declared: Option<(usize, usize)>,
    max_index: Option<u32>,
    kind: &'static str,
    mechanisms: &[ErrorMechanism],
    mechanism_lines: &[usize],
) -> Result<usize, DemParseError> {
    let inferred = max_index.map_or(0, |m| m as usize + 1);
    match declared {
        None => Ok(inferred),
        Some((count, _)) if count >= inferred => Ok(count),
        Some((count, _)) => {
            // Point at the first offending instruction.
            for (mech, &lineno) in mechanisms.iter().zip(mechanism_lines) {
                let indices = if kind == "detector" {
                    &mech.detectors
                } else {
                    &mech.observables
                };
                if let Some(&index) = indices.iter().find(|&&i| i as usize >= count) {
                    return Err(err(
                        lineno,
                        1,
                        DemErrorKind::IndexExceedsDeclared {
                            kind,
                            index,
                            declared: count,
                        },
                    ));
                }
            }
            unreachable!("declared count below inferred implies an offending index")
        }
    }
}

fn parse_count(rest: &str, lineno: usize, column: usize) -> Result<usize, DemParseError> {
    rest.trim()
        .parse::<usize>()
        .map_err(|_| err(lineno, column, DemErrorKind::MalformedCount))
}

fn parse_error_instruction(
    line: &str,
    lineno: usize,
    column: usize,
) -> Result<ErrorMechanism, DemParseError> {
    let rest = line.strip_prefix("error").unwrap();
    let open = rest.starts_with('(');
    let close = rest.find(')');
    let (prob_text, targets_text) = match (open, close) {
        (true, Some(end)) => (&rest[1..end], &rest[end + 1..]),
        _ => return Err(err(lineno, column, DemErrorKind::MalformedProbability)),
    };
    let prob_column = column + "error(".len();
    if !prob_text
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
    {
        return Err(err(lineno, prob_column, DemErrorKind::MalformedProbability));
    }
    let probability: f64 = prob_text
        .trim()
        .parse()
        .map_err(|_| err(lineno, prob_column, DemErrorKind::MalformedProbability))?;
    if !(probability > 0.0 && probability < 1.0) {
        return Err(err(
            lineno,
            prob_column,
            DemErrorKind::ProbabilityRange(probability),
        ));
    }

    let mut detectors = Vec::new();
    let mut observables = Vec::new();
    let mut any = false;
    for token in targets_text.split_whitespace() {
        any = true;
        let (kind, list): (_, &mut Vec<u32>) = match token.chars().next() {
            Some('D') => ("D", &mut detectors),
            Some('L') => ("L", &mut observables),
            _ => {
                return Err(err(
                    lineno,
                    column,
                    DemErrorKind::InvalidTarget(token.to_string()),
                ))
            }
        };
        let index: u32 = token[1..].parse().map_err(|_| {
            err(lineno, column, DemErrorKind::InvalidTarget(token.to_string()))
        })?;
        if list.contains(&index) {
            return Err(err(
                lineno,
                column,
                DemErrorKind::DuplicateTarget(format!("{kind}{index}")),
            ));
        }
        list.push(index);
    }
    if !any {
        return Err(err(lineno, column, DemErrorKind::MissingTargets));
    }
    Ok(ErrorMechanism::new(probability, detectors, observables)
        .expect("targets validated above")
        .with_round(0))
}

/// Serializes a model in the text format: count declarations followed by one
/// `error(...)` instruction per mechanism, in model order. Round tags are not
/// part of the format and are dropped.
pub fn serialize_dem(model: &DetectorErrorModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("detector_count {}\n", model.num_detectors()));
    out.push_str(&format!("observable_count {}\n", model.num_observables()));
    for mech in model.mechanisms() {
        out.push_str(&format!("error({})", mech.probability));
        for &d in &mech.detectors {
            out.push_str(&format!(" D{d}"));
        }
        for &o in &mech.observables {
            out.push_str(&format!(" L{o}"));
        }
        out.push('\n');
    }
    out
}
