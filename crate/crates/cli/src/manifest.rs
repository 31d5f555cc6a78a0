//! Reproducibility record written next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub command: String,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub seeds: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub execution_model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Resolved flag values, after config-file merging.
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            format_version: MANIFEST_FORMAT_VERSION,
            tool_version: wfc_core::TOOL_VERSION.to_owned(),
            command: command.to_owned(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: BTreeMap::new(),
            execution_model: None,
            epsilon: None,
            parameters: BTreeMap::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(FileHash::of(path)?);
        Ok(())
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("parameters serialize");
        self.parameters.insert(key.to_owned(), value);
    }

    /// Hashes `output` and writes the manifest to `<output>.manifest.json`.
    pub fn write_for(mut self, output: &Path, wall_time_s: f64) -> Result<PathBuf, CliError> {
        self.outputs.push(FileHash::of(output)?);
        self.wall_time_s = wall_time_s;
        let path = manifest_path(output);
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Recomputes every recorded hash; returns the paths whose contents changed.
pub fn verify_manifest(path: &Path) -> Result<Vec<String>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::input("manifest", format!("{}: {e}", path.display())))?;
    let mut changed = Vec::new();
    for f in manifest.inputs.iter().chain(&manifest.outputs) {
        match FileHash::of(Path::new(&f.path)) {
            Ok(now) if now.sha256 == f.sha256 => {}
            _ => changed.push(f.path.clone()),
        }
    }
    Ok(changed)
}
