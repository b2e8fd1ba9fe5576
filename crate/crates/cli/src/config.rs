//! Config-file loading and the per-run record.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::failure::{CliError, CliResult};

/// Parses `path` as the command config, or returns defaults.
pub fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Serialize)]
struct RunRecord<'a, C> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    outputs: &'a [String],
}

/// Writes `run.json` with the fully resolved config.
pub fn write_run_record<C: Serialize>(out: &Path, command: &str, config: &C, outputs: &[String]) -> CliResult<()> {
    let record = RunRecord {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        outputs,
    };
    microevo::tensor_io::write_json(out.join("run.json"), &record)?;
    Ok(())
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
