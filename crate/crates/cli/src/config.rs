//! Optional TOML defaults; command-line flags take precedence.

use std::path::Path;

use serde::Deserialize;
use wfc_core::ExecutionModel;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub exec: Option<ExecutionModel>,
    pub epsilon: Option<f64>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub k: Option<usize>,
    pub lmax: Option<f64>,
    pub cap: Option<u64>,
    pub sample_size: Option<usize>,
    pub repetitions: Option<usize>,
    pub queries: Option<usize>,
    pub alpha: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(&path.display().to_string(), e))?;
        Self::parse(&text)
            .map_err(|m| CliError::input("config", format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Flag value, else config value, else `default`.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// Like [`pick`] but with no default: the value must come from somewhere.
pub fn require<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(config).ok_or_else(|| {
        CliError::input(
            "usage",
            format!("--{name} is required (flag or config file)"),
        )
    })
}
