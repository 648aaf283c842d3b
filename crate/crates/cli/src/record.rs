use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RECORD_SUFFIX: &str = ".record.json";

/// One pass/fail judgement. Non-gating verdicts are reported but do not
/// change the exit status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub gating: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Verdict { name: name.into(), pass, gating: true, detail: detail.into() }
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config: RunConfig,
    pub results: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    /// RNG seeds consumed by the command; empty for deterministic commands.
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        all_pass(&self.verdicts)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn path_in(dir: &Path, command: &str) -> PathBuf {
        dir.join(format!("{command}{RECORD_SUFFIX}"))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path_in(dir, &self.command);
        let text = serde_json::to_string_pretty(self).expect("records serialize");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let version = value.get("schema_version").and_then(|v| v.as_u64());
        if version != Some(SCHEMA_VERSION as u64) {
            return Err(CliError::Schema(format!(
                "{}: schema_version {version:?} is not {SCHEMA_VERSION}",
                path.display()
            )));
        }
        serde_json::from_value(value).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
    }
}

pub fn all_pass(verdicts: &[Verdict]) -> bool {
    verdicts.iter().filter(|v| v.gating).all(|v| v.pass)
}
