//! Experiment configuration: a versioned TOML document with strict unknown-key
//! rejection, validated into a runnable plan.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use postsel::decoders::{BpConfig, DecoderKind, MwpmConfig};
use postsel::error_model::DetectorErrorModel;
use postsel::reweighting::{Criterion, ReweightVariant};
use postsel::windowing::{ReweightScope, WindowLayout};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Suppression-parameter grids published for sweeps, named by the code family
/// they were tuned on. Values are `z` with `b = 1 + z`.
pub fn z_preset(name: &str) -> Option<&'static [f64]> {
    match name {
        "surface" => Some(&[
            1e-12, 1e-6, 1e-3, 0.01, 0.02, 0.04, 0.06, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8,
            0.9, 1.0,
        ]),
        "bb18" => Some(&[1e-8, 0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]),
        "bb" => Some(&[1e-15, 1e-8, 1e-4, 1e-3, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5]),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSection,
    pub decoder: DecoderSection,
    pub policy: PolicySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSection>,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub builder: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_data: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_meas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DecoderSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serial_schedule: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_triggered: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub criterion: String,
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_preset: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub n_com: u32,
    pub n_buf: u32,
    pub scope: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub shots: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// A validated, runnable experiment.
#[derive(Debug)]
pub struct RunPlan {
    /// Canonicalized model.
    pub model: DetectorErrorModel,
    pub decoder: DecoderKind,
    pub criterion: Criterion,
    pub rule_variant: ReweightVariant,
    pub z_values: Vec<f64>,
    pub window: Option<WindowLayout>,
    pub shots: u64,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// Config echo embedded in results documents: execution-resource fields
    /// (workers, output path) are stripped so documents stay byte-identical
    /// across worker counts.
    pub config_echo: ExperimentConfig,
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {message}"))
}

fn require<T: Copy>(field: &str, value: Option<T>, builder: &str) -> Result<T, CliError> {
    value.ok_or_else(|| invalid(field, format!("required for builder \"{builder}\"")))
}

fn forbid<T>(field: &str, value: &Option<T>, builder: &str) -> Result<(), CliError> {
    if value.is_some() {
        return Err(invalid(field, format!("not accepted by builder \"{builder}\"")));
    }
    Ok(())
}

pub fn build_model(section: &ModelSection) -> Result<DetectorErrorModel, CliError> {
    let raw = match section.builder.as_str() {
        "repetition" => {
            forbid("model.p", &section.p, "repetition")?;
            forbid("model.path", &section.path, "repetition")?;
            postsel::build_repetition_code(
                require("model.distance", section.distance, "repetition")?,
                require("model.rounds", section.rounds, "repetition")?,
                require("model.p_data", section.p_data, "repetition")?,
                require("model.p_meas", section.p_meas, "repetition")?,
            )
            .map_err(|e| invalid("model", e))?
        }
        "surface" => {
            forbid("model.p_data", &section.p_data, "surface")?;
            forbid("model.p_meas", &section.p_meas, "surface")?;
            forbid("model.path", &section.path, "surface")?;
            postsel::build_surface_code_phenomenological(
                require("model.distance", section.distance, "surface")?,
                require("model.rounds", section.rounds, "surface")?,
                require("model.p", section.p, "surface")?,
            )
            .map_err(|e| invalid("model", e))?
        }
        "dem" => {
            forbid("model.distance", &section.distance, "dem")?;
            forbid("model.rounds", &section.rounds, "dem")?;
            forbid("model.p_data", &section.p_data, "dem")?;
            forbid("model.p_meas", &section.p_meas, "dem")?;
            forbid("model.p", &section.p, "dem")?;
            let path = section
                .path
                .as_ref()
                .ok_or_else(|| invalid("model.path", "required for builder \"dem\""))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid("model.path", format!("{}: {e}", path.display())))?;
            postsel::parse_dem(&text).map_err(|e| invalid("model.path", e))?
        }
        other => {
            return Err(invalid(
                "model.builder",
                format!("unknown builder \"{other}\" (expected repetition, surface, or dem)"),
            ))
        }
    };
    Ok(raw.canonicalize())
}

pub fn build_decoder_kind(section: &DecoderSection) -> Result<DecoderKind, CliError> {
    match section.name.as_str() {
        "bp-osd" => {
            if section.max_triggered.is_some() {
                return Err(invalid("decoder.max_triggered", "only accepted by mwpm"));
            }
            let mut config = BpConfig::default();
            if let Some(v) = section.max_iterations {
                config.max_iterations = v;
            }
            if let Some(v) = section.scaling_factor {
                config.scaling_factor = v;
            }
            if let Some(v) = section.serial_schedule {
                config.serial_schedule = v;
            }
            config.validate().map_err(|e| invalid("decoder", e))?;
            Ok(DecoderKind::BpOsd(config))
        }
        "mwpm" => {
            for (field, set) in [
                ("decoder.max_iterations", section.max_iterations.is_some()),
                ("decoder.scaling_factor", section.scaling_factor.is_some()),
                ("decoder.serial_schedule", section.serial_schedule.is_some()),
            ] {
                if set {
                    return Err(invalid(field, "only accepted by bp-osd"));
                }
            }
            let mut config = MwpmConfig::default();
            if let Some(v) = section.max_triggered {
                config.max_triggered = v;
            }
            Ok(DecoderKind::Mwpm(config))
        }
        "exact-ml" => Ok(DecoderKind::ExactMl),
        other => Err(invalid(
            "decoder.name",
            format!("unknown decoder \"{other}\" (expected bp-osd, mwpm, or exact-ml)"),
        )),
    }
}

pub fn parse_criterion(text: &str) -> Result<Criterion, CliError> {
    if text == "pec" {
        return Ok(Criterion::Pec);
    }
    if let Some(rounds) = text.strip_suffix("r-lec") {
        let rounds: u32 = rounds
            .parse()
            .map_err(|_| invalid("policy.criterion", format!("unparseable \"{text}\"")))?;
        return Criterion::lec(rounds).map_err(|e| invalid("policy.criterion", e));
    }
    Err(invalid(
        "policy.criterion",
        format!("unknown criterion \"{text}\" (expected pec or <k>r-lec)"),
    ))
}

fn parse_rule(text: &str) -> Result<ReweightVariant, CliError> {
    match text {
        "ratio" => Ok(ReweightVariant::Ratio),
        "gap" => Ok(ReweightVariant::Gap),
        other => Err(invalid(
            "policy.rule",
            format!("unknown rule \"{other}\" (expected ratio or gap)"),
        )),
    }
}

fn parse_scope(text: &str) -> Result<ReweightScope, CliError> {
    match text {
        "full-window" => Ok(ReweightScope::FullWindow),
        "commit-only" => Ok(ReweightScope::CommitOnly),
        other => Err(invalid(
            "window.scope",
            format!("unknown scope \"{other}\" (expected full-window or commit-only)"),
        )),
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn validate(mut config: ExperimentConfig, overrides: &Overrides) -> Result<RunPlan, CliError> {
    if config.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!(
                "expected {CONFIG_SCHEMA_VERSION}, got {}",
                config.schema_version
            ),
        ));
    }
    if let Some(seed) = overrides.seed {
        config.run.seed = seed;
    }
    if let Some(shots) = overrides.shots {
        config.run.shots = shots;
    }
    if let Some(workers) = overrides.workers {
        config.run.workers = Some(workers);
    }
    if let Some(out) = &overrides.out {
        config.run.out = Some(out.clone());
    }

    let model = build_model(&config.model)?;
    let decoder = build_decoder_kind(&config.decoder)?;
    // Surface decoder/model incompatibilities before any sampling happens.
    decoder
        .build(&model)
        .map_err(|e| invalid("decoder", format!("incompatible with model: {e}")))?;

    let criterion = parse_criterion(&config.policy.criterion)?;
    let rule_variant = parse_rule(&config.policy.rule)?;
    let z_values = match (&config.policy.z_values, &config.policy.z_preset) {
        (Some(values), None) => values.clone(),
        (None, Some(name)) => z_preset(name)
            .ok_or_else(|| {
                invalid(
                    "policy.z_preset",
                    format!("unknown preset \"{name}\" (expected surface, bb18, or bb)"),
                )
            })?
            .to_vec(),
        (Some(_), Some(_)) => {
            return Err(invalid(
                "policy",
                "z_values and z_preset are mutually exclusive",
            ))
        }
        (None, None) => {
            return Err(invalid("policy", "one of z_values or z_preset is required"))
        }
    };
    if z_values.is_empty() {
        return Err(invalid("policy.z_values", "must not be empty"));
    }
    for &z in &z_values {
        if !(z >= 0.0) {
            return Err(invalid(
                "policy.z_values",
                format!("z = {z} must be non-negative"),
            ));
        }
    }

    let window = match &config.window {
        None => None,
        Some(section) => {
            let total_rounds = model
                .mechanisms()
                .iter()
                .map(|m| {
                    m.round.ok_or_else(|| {
                        invalid("window", "model has untagged mechanisms; windowing needs round tags")
                    })
                })
                .try_fold(0u32, |acc, r| r.map(|r| acc.max(r + 1)))?;
            let scope = parse_scope(&section.scope)?;
            Some(
                WindowLayout::new(section.n_com, section.n_buf, total_rounds, scope)
                    .map_err(|e| invalid("window", e))?,
            )
        }
    };

    if config.run.shots < 1 {
        return Err(invalid("run.shots", "must be >= 1"));
    }
    let workers = config.run.workers.unwrap_or(1);
    if workers < 1 {
        return Err(invalid("run.workers", "must be >= 1"));
    }

    let shots = config.run.shots;
    let seed = config.run.seed;
    let out = config.run.out.clone();
    let mut config_echo = config;
    config_echo.run.workers = None;
    config_echo.run.out = None;
    Ok(RunPlan {
        model,
        decoder,
        criterion,
        rule_variant,
        z_values,
        window,
        shots,
        seed,
        workers,
        out,
        config_echo,
    })
}
