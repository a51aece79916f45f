//! Run manifests: everything needed to reproduce the data files of a run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub energies: Vec<f64>,
    pub etas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> CheckResult {
        CheckResult { name: name.into(), value, limit, pass: value <= limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub model: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub seed: u64,
    pub grid: Option<GridSpec>,
    pub xi: Option<f64>,
    pub zeta: Option<f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub acceptance_constants: BTreeMap<String, f64>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
    pub notes: BTreeMap<String, String>,
    pub checks: Vec<CheckResult>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> RunManifest {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            command: command.into(),
            model: cfg.graph.model.clone(),
            n: cfg.graph.n,
            d: cfg.graph.d,
            seed: cfg.seed(),
            grid: None,
            xi: None,
            zeta: None,
            tolerances: BTreeMap::new(),
            acceptance_constants: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
            config: cfg.clone(),
            outputs: Vec::new(),
            notes: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<RunManifest, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }
}
