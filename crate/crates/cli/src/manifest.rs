use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliError;

/// Written next to every output file as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub timestamp_unix: u64,
    pub outputs: Vec<PathBuf>,
    pub config: &'a C,
}

impl<'a, C: Serialize> RunManifest<'a, C> {
    pub fn new(command: &'static str, seed: Option<u64>, config: &'a C, outputs: Vec<PathBuf>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs,
            config,
        }
    }

    pub fn write_next_to(&self, out: &Path) -> Result<PathBuf, CliError> {
        let path = with_suffix(out, ".manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// `out` with `suffix` appended to its file name.
pub fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
