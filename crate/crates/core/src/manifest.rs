//! Deterministic record of one generation run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    /// 1-based Euler step.
    pub step: usize,
    /// Flow time the model was evaluated at.
    pub t: f64,
    /// Layers whose I2I logits received injected rows at this step.
    pub injected_layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// SHA-256 over every input that affects output bytes.
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    pub steps: Vec<StepLog>,
    pub injections: usize,
    /// Model evaluations per guidance branch.
    pub model_evaluations: usize,
    pub output_checksum: String,
    pub outputs: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub error: Option<ErrorRecord>,
}

impl RunManifest {
    pub fn new() -> Self {
        Self {
            version: crate::VERSION.to_string(),
            ..Self::default()
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
