use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use postsel_cli::config::{load_config, validate, Overrides};
use postsel_cli::report::{load_results, serialize_results, sweep_csv, sweep_report};
use postsel_cli::runner::run_experiment;
use postsel_cli::{bounds, CliError};

#[derive(Parser)]
#[command(
    name = "postsel",
    version,
    about = "Post-selection decoding experiments on detector error models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment sweep and emit a results document.
    Run {
        /// Path to the experiment config (TOML).
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Write the results document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge results documents into one plot-data table (CSV + JSON).
    SweepReport {
        /// Results documents produced by `run`.
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Base path: writes <out>.csv and <out>.json; stdout gets the CSV
        /// when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the conditional-rate bounds on every reachable syndrome.
    CheckBounds {
        #[command(flatten)]
        model: ModelSource,
        /// Write the bound report (JSON) here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a model file and echo its canonical form.
    ParseDem {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelSource {
    /// Model file path.
    #[arg(long)]
    dem: Option<PathBuf>,
    /// Repetition-code builder: distance,rounds,p_data,p_meas
    #[arg(long, value_name = "D,R,P_DATA,P_MEAS")]
    repetition: Option<String>,
    /// Surface-code builder: distance,rounds,p
    #[arg(long, value_name = "D,R,P")]
    surface: Option<String>,
}

fn parse_fields(text: &str, expected: usize, usage: &str) -> Result<Vec<f64>, CliError> {
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != expected {
        return Err(CliError::Validation(format!(
            "expected {expected} comma-separated values ({usage}), got \"{text}\""
        )));
    }
    fields
        .iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("unparseable number \"{f}\"")))
        })
        .collect()
}

impl ModelSource {
    fn build(&self) -> Result<postsel::DetectorErrorModel, CliError> {
        if let Some(path) = &self.dem {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            return postsel::parse_dem(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())));
        }
        if let Some(spec) = &self.repetition {
            let v = parse_fields(spec, 4, "distance,rounds,p_data,p_meas")?;
            return postsel::build_repetition_code(v[0] as u32, v[1] as u32, v[2], v[3])
                .map_err(|e| CliError::Validation(e.to_string()));
        }
        if let Some(spec) = &self.surface {
            let v = parse_fields(spec, 3, "distance,rounds,p")?;
            return postsel::build_surface_code_phenomenological(v[0] as u32, v[1] as u32, v[2])
                .map_err(|e| CliError::Validation(e.to_string()));
        }
        unreachable!("clap enforces exactly one model source")
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            seed,
            shots,
            workers,
            out,
        } => {
            let overrides = Overrides {
                seed,
                shots,
                workers,
                out,
            };
            let plan = validate(load_config(&config)?, &overrides)?;
            let started = Instant::now();
            let doc = run_experiment(&plan)?;
            // Timing stays out of the document so reruns are byte-identical.
            eprintln!(
                "postsel run: {} shots x {} sweep points in {:.2?} ({} workers)",
                plan.shots,
                plan.z_values.len(),
                started.elapsed(),
                plan.workers
            );
            write_or_print(&plan.out, &serialize_results(&doc))
        }
        Command::SweepReport { results, out } => {
            let docs = results
                .iter()
                .map(|p| load_results(p))
                .collect::<Result<Vec<_>, _>>()?;
            let report = sweep_report(&docs)?;
            let csv = sweep_csv(&report);
            match out {
                Some(base) => {
                    let mut json = serde_json::to_string_pretty(&report)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    json.push('\n');
                    std::fs::write(base.with_extension("csv"), &csv)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    std::fs::write(base.with_extension("json"), &json)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    Ok(())
                }
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::CheckBounds { model, out } => {
            let doc = bounds::check_bounds_command(&model.build()?)?;
            let mut json =
                serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
            json.push('\n');
            write_or_print(&out, &json)?;
            if doc.all_bounds_hold {
                Ok(())
            } else {
                Err(CliError::BoundViolation)
            }
        }
        Command::ParseDem { path, out } => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let model = postsel::parse_dem(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            write_or_print(&out, &postsel::serialize_dem(&model.canonicalize()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
