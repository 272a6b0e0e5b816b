//! Reproducible run reports for the CLI.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// Machine-readable record of one CLI invocation. `results` is the
/// deterministic payload: re-running with identical parameters and seed
/// reproduces it byte for byte (wall time is recorded outside it).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub results: Value,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn new(
        command: impl Into<String>,
        parameters: BTreeMap<String, Value>,
        results: Value,
        seed: u64,
        wall_time_ms: u64,
    ) -> Self {
        RunReport {
            command: command.into(),
            parameters,
            results,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms,
        }
    }

    /// Canonical serialization of the results payload alone.
    pub fn results_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.results).expect("results serialize")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serialize");
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| crate::error::Error::Format(format!("{}: {e}", path.display())))
    }
}
