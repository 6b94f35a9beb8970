//! `afem` subcommand: run a configuration and write its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use qafem::{afem_run, AfemError, History64};
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;

pub const HISTORY_FILE: &str = "history.csv";
pub const MESH_FILE: &str = "mesh.txt";
pub const TRACE_FILE: &str = "scf_trace.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub version: String,
    pub seed: u64,
    pub config_source: String,
    pub output_dir: String,
    pub status: String,
}

/// Config echo plus provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: RunConfig,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is plain data")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(format!("manifest: {e}")))
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub history: History64,
    pub out_dir: PathBuf,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

/// Writes history, trace and final mesh for whatever iterations completed.
pub fn write_history(dir: &Path, history: &History64) -> Result<(), CliError> {
    write(&dir.join(HISTORY_FILE), &history.to_csv())?;
    write(&dir.join(TRACE_FILE), &history.scf_trace_csv())?;
    if let Some(mesh) = &history.final_mesh {
        write(&dir.join(MESH_FILE), &mesh.to_ascii())?;
    }
    Ok(())
}

/// Runs `config` from `source`, writing into `out_override` when given,
/// else into the configured directory.
pub fn run_config(config: &RunConfig, source: &str, out_override: Option<&Path>) -> Result<RunOutcome, CliError> {
    let out_dir = out_override.map_or_else(|| PathBuf::from(&config.output_dir), Path::to_path_buf);
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let experiment = config.experiment()?;

    let mut manifest = Manifest {
        run: RunInfo {
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config_source: source.into(),
            output_dir: out_dir.display().to_string(),
            status: "running".into(),
        },
        config: config.clone(),
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    write(&manifest_path, &manifest.to_toml())?;

    match afem_run(&experiment.spec, &experiment.domain, &experiment.opts) {
        Ok(history) => {
            write_history(&out_dir, &history)?;
            manifest.run.status = format!("ok: {}", history.stop_reason);
            write(&manifest_path, &manifest.to_toml())?;
            Ok(RunOutcome { history, out_dir })
        }
        Err(AfemError::Solve {
            iteration,
            history,
            source,
        }) => {
            write_history(&out_dir, &history)?;
            let msg = format!("iteration {iteration}: {source}");
            manifest.run.status = format!("failed: {msg}");
            write(&manifest_path, &manifest.to_toml())?;
            Err(CliError::Solver(msg))
        }
        Err(e) => {
            manifest.run.status = format!("failed: {e}");
            write(&manifest_path, &manifest.to_toml())?;
            Err(CliError::Solver(e.to_string()))
        }
    }
}

pub fn run(config_path: &Path, out_override: Option<&Path>) -> Result<RunOutcome, CliError> {
    let config = load_config(config_path)?;
    run_config(&config, &config_path.display().to_string(), out_override)
}
