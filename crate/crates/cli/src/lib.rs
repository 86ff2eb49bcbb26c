//! Shared plumbing for the `coexsim` binary: error-to-exit-code mapping,
//! scenario loading with overrides, and artifact output helpers.

pub mod overrides;
pub mod scenario_file;
pub mod svg;

use coex_core::harness::HarnessError;
use coex_core::model::ModelError;
use coex_core::scenario::{default_scenario, validate, ScenarioConfig, ScenarioError, ValidatedScenario};
use coex_core::sim::SimError;
use scenario_file::ScenarioFile;
use std::fmt;
use std::fs;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration, overrides, or arguments. Exit code 1.
    Config(String),
    /// The fixed-point solver did not converge. Exit code 2.
    NonConvergence(String),
    /// Filesystem failure. Exit code 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::NonConvergence(msg) => write!(f, "{msg}"),
            CliError::Io(msg) => write!(f, "i/o failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match &e {
            HarnessError::ModelAt {
                source: ModelError::NonConvergence { .. },
                ..
            } => CliError::NonConvergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(context: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{context} {}: {e}", path.display()))
}

/// Load the scenario file, or the built-in default when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    match path {
        None => Ok(default_scenario()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err("reading", path, e))?;
            let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!("scenario file {}: {e}", path.display()))
            })?;
            Ok(file.into_config())
        }
    }
}

/// Load, apply overrides, validate, and echo the canonicalized scenario to
/// `<output_dir>/scenario.resolved.json` so that every command records the
/// exact configuration it ran.
pub fn resolve_scenario(
    path: Option<&Path>,
    cli_overrides: &[String],
    output_dir: &Path,
) -> Result<ValidatedScenario, CliError> {
    let mut cfg = load_config(path)?;
    overrides::apply_overrides(&mut cfg, cli_overrides)?;
    let validated = validate(cfg)?;
    fs::create_dir_all(output_dir).map_err(|e| io_err("creating", output_dir, e))?;
    let resolved = output_dir.join("scenario.resolved.json");
    let text = serde_json::to_string_pretty(&ScenarioFile::from_config(validated.config()))
        .expect("scenario serializes");
    fs::write(&resolved, text + "\n").map_err(|e| io_err("writing", &resolved, e))?;
    Ok(validated)
}

/// Write a text artifact under the output directory.
pub fn write_artifact(output_dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    fs::create_dir_all(output_dir).map_err(|e| io_err("creating", output_dir, e))?;
    let path = output_dir.join(name);
    fs::write(&path, content).map_err(|e| io_err("writing", &path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}
