//! Results documents, model fingerprints, and the merged sweep report.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use postsel::error_model::DetectorErrorModel;
use postsel::metrics::RateEstimate;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// SHA-256 of the canonical text serialization; identifies a model across
/// documents.
pub fn model_fingerprint(model: &DetectorErrorModel) -> String {
    let canonical = postsel::serialize_dem(&model.canonicalize());
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelSummary {
    pub fingerprint: String,
    pub num_mechanisms: usize,
    pub num_detectors: usize,
    pub num_observables: usize,
}

impl ModelSummary {
    pub fn of(model: &DetectorErrorModel) -> Self {
        Self {
            fingerprint: model_fingerprint(model),
            num_mechanisms: model.num_mechanisms(),
            num_detectors: model.num_detectors(),
            num_observables: model.num_observables(),
        }
    }
}

/// One rate estimate in a results document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RateRow {
    pub shots: u64,
    pub accepted: u64,
    pub logical_errors: u64,
    pub p_l: f64,
    pub sigma_l: f64,
    pub rejection_rate: f64,
    pub sigma_rejection: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub no_accepted: bool,
    pub decoder_failures: u64,
}

impl RateRow {
    pub fn from_estimate(estimate: &RateEstimate, decoder_failures: u64) -> Self {
        Self {
            shots: estimate.shots,
            accepted: estimate.accepted,
            logical_errors: estimate.logical_errors,
            p_l: estimate.p_l,
            sigma_l: estimate.sigma_l,
            rejection_rate: estimate.rejection_rate,
            sigma_rejection: estimate.sigma_rejection,
            wilson_low: estimate.p_l_wilson_95.0,
            wilson_high: estimate.p_l_wilson_95.1,
            no_accepted: estimate.no_accepted,
            decoder_failures,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ZRow {
    pub z: f64,
    pub b: f64,
    #[serde(flatten)]
    pub rate: RateRow,
    pub suppression_factor: Option<f64>,
    pub suppression_sigma: Option<f64>,
    pub clamp_events: u64,
}

/// One experiment's results: config echo, model identity, the shared
/// baseline, and one row per suppression value. Wall-clock details are
/// deliberately absent so reruns produce identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultsDoc {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub model: ModelSummary,
    pub baseline: RateRow,
    pub rows: Vec<ZRow>,
}

pub fn serialize_results(doc: &ResultsDoc) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("results serialize");
    text.push('\n');
    text
}

pub fn load_results(path: &Path) -> Result<ResultsDoc, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// One line of the merged sweep table.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub code: String,
    pub decoder: String,
    pub criterion: String,
    pub rule: String,
    /// Absent on the baseline row.
    pub z: Option<f64>,
    pub b: Option<f64>,
    pub rejection_rate: f64,
    pub sigma_rejection: f64,
    pub p_l: f64,
    pub sigma_l: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub suppression_factor: Option<f64>,
    pub suppression_sigma: Option<f64>,
    pub clamp_events: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepReport {
    pub schema_version: u32,
    pub model: ModelSummary,
    pub rows: Vec<SweepRow>,
}

/// Merges results documents into one table keyed by (code, decoder,
/// criterion, b), sorted by rejection rate. Documents must describe the same
/// model.
pub fn sweep_report(docs: &[ResultsDoc]) -> Result<SweepReport, CliError> {
    let Some(first) = docs.first() else {
        return Err(CliError::Validation(
            "sweep-report needs at least one results document".into(),
        ));
    };
    let fingerprints: BTreeSet<&str> = docs.iter().map(|d| d.model.fingerprint.as_str()).collect();
    if fingerprints.len() > 1 {
        return Err(CliError::Validation(format!(
            "results documents describe different models: {}",
            fingerprints
                .iter()
                .map(|f| &f[..12.min(f.len())])
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let mut rows = Vec::new();
    let mut seen_baselines = BTreeSet::new();
    for doc in docs {
        let code = doc.model.fingerprint[..12.min(doc.model.fingerprint.len())].to_string();
        let decoder = doc.config.decoder.name.clone();
        let criterion = doc.config.policy.criterion.clone();
        let rule = doc.config.policy.rule.clone();
        // Series sharing (code, decoder) share their baseline row.
        if seen_baselines.insert((code.clone(), decoder.clone())) {
            rows.push(SweepRow {
                code: code.clone(),
                decoder: decoder.clone(),
                criterion: "baseline".into(),
                rule: "none".into(),
                z: None,
                b: None,
                rejection_rate: 0.0,
                sigma_rejection: 0.0,
                p_l: doc.baseline.p_l,
                sigma_l: doc.baseline.sigma_l,
                wilson_low: doc.baseline.wilson_low,
                wilson_high: doc.baseline.wilson_high,
                suppression_factor: None,
                suppression_sigma: None,
                clamp_events: 0,
            });
        }
        for row in &doc.rows {
            rows.push(SweepRow {
                code: code.clone(),
                decoder: decoder.clone(),
                criterion: criterion.clone(),
                rule: rule.clone(),
                z: Some(row.z),
                b: Some(row.b),
                rejection_rate: row.rate.rejection_rate,
                sigma_rejection: row.rate.sigma_rejection,
                p_l: row.rate.p_l,
                sigma_l: row.rate.sigma_l,
                wilson_low: row.rate.wilson_low,
                wilson_high: row.rate.wilson_high,
                suppression_factor: row.suppression_factor,
                suppression_sigma: row.suppression_sigma,
                clamp_events: row.clamp_events,
            });
        }
    }
    rows.sort_by(|a, b| {
        (&a.code, &a.decoder)
            .cmp(&(&b.code, &b.decoder))
            .then(a.rejection_rate.total_cmp(&b.rejection_rate))
            .then(a.criterion.cmp(&b.criterion))
            .then(a.b.unwrap_or(0.0).total_cmp(&b.b.unwrap_or(0.0)))
    });
    Ok(SweepReport {
        schema_version: RESULTS_SCHEMA_VERSION,
        model: first.model.clone(),
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Delimiter-separated form of the sweep table.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "code,decoder,criterion,rule,z,b,rejection_rate,sigma_rejection,p_l,sigma_l,\
         wilson_low,wilson_high,suppression_factor,suppression_sigma,clamp_events\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.code,
            r.decoder,
            r.criterion,
            r.rule,
            opt(r.z),
            opt(r.b),
            r.rejection_rate,
            r.sigma_rejection,
            r.p_l,
            r.sigma_l,
            r.wilson_low,
            r.wilson_high,
            opt(r.suppression_factor),
            opt(r.suppression_sigma),
            r.clamp_events
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate, Overrides};
    use crate::runner::run_experiment;

    fn doc_for(criterion: &str, shots: u64) -> ResultsDoc {
        let text = format!(
            r#"
schema_version = 1
[model]
builder = "repetition"
distance = 3
rounds = 1
p_data = 0.1
p_meas = 0.0
[decoder]
name = "exact-ml"
[policy]
criterion = "{criterion}"
rule = "ratio"
z_values = [0.5]
[run]
shots = {shots}
seed = 11
"#
        );
        let config = toml::from_str(&text).unwrap();
        run_experiment(&validate(config, &Overrides::default()).unwrap()).unwrap()
    }

    #[test]
    fn results_round_trip_through_json() {
        let doc = doc_for("pec", 2000);
        let text = serialize_results(&doc);
        let back: ResultsDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc, back);
    }

    #[test]
    fn fingerprint_is_stable_and_canonical() {
        let a = postsel::build_repetition_code(3, 1, 0.1, 0.0).unwrap();
        let b = postsel::build_repetition_code(3, 1, 0.1, 0.0).unwrap();
        assert_eq!(model_fingerprint(&a), model_fingerprint(&b));
        let c = postsel::build_repetition_code(3, 1, 0.2, 0.0).unwrap();
        assert_ne!(model_fingerprint(&a), model_fingerprint(&c));
    }

    #[test]
    fn merges_two_criteria_with_one_baseline() {
        let pec = doc_for("pec", 2000);
        let lec = doc_for("2r-lec", 2000);
        let report = sweep_report(&[pec, lec]).unwrap();
        let baselines = report
            .rows
            .iter()
            .filter(|r| r.criterion == "baseline")
            .count();
        assert_eq!(baselines, 1);
        assert_eq!(report.rows.len(), 3);
        let csv = sweep_csv(&report);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("code,decoder"));
    }

    #[test]
    fn mismatched_models_refuse_to_merge() {
        let a = doc_for("pec", 1000);
        let mut b = doc_for("pec", 1000);
        b.model.fingerprint = "deadbeef".into();
        let err = sweep_report(&[a, b]).unwrap_err();
        assert!(matches!(err, CliError::Validation(m) if m.contains("different models")));
    }

    #[test]
    fn single_document_reports_cleanly() {
        let doc = doc_for("3r-lec", 1000);
        let report = sweep_report(std::slice::from_ref(&doc)).unwrap();
        assert_eq!(report.rows.len(), 2);
        // Baseline sorts first within the group.
        assert_eq!(report.rows[0].criterion, "baseline");
    }
}
