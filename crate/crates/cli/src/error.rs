//! Exit codes and machine-readable diagnostics.

use serde_json::json;
use thiserror::Error;
use wfc_core::explorer::ExplorerError;
use wfc_core::selector::SelectorError;
use wfc_core::simulator::SimulatorError;
use wfc_core::{ProfileError, ProxyError, WorkflowError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn input(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            kind,
            message: message.into(),
        }
    }

    pub fn infeasible(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INFEASIBLE,
            kind,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            kind: "internal",
            message: message.into(),
        }
    }

    pub fn io(path: &str, err: std::io::Error) -> Self {
        Self::input("io", format!("{path}: {err}"))
    }

    /// One JSON line followed by a human-readable line.
    pub fn report(&self) -> String {
        let diag = json!({"level": "error", "code": self.code, "kind": self.kind, "message": self.message});
        format!("{diag}\nerror: {}", self.message)
    }
}

pub fn warning(message: &str) -> String {
    let diag = json!({"level": "warning", "message": message});
    format!("{diag}\nwarning: {message}")
}

impl From<WorkflowError> for CliError {
    fn from(e: WorkflowError) -> Self {
        Self::input("workflow", e.to_string())
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        Self::input("profile", e.to_string())
    }
}

impl From<ProxyError> for CliError {
    fn from(e: ProxyError) -> Self {
        let kind = match e {
            ProxyError::MissingProfile { .. } => "missing_profile",
            _ => "proxy",
        };
        Self::input(kind, e.to_string())
    }
}

impl From<ExplorerError> for CliError {
    fn from(e: ExplorerError) -> Self {
        match e {
            ExplorerError::MissingProfile { .. } => Self::input("missing_profile", e.to_string()),
            ExplorerError::Proxy(p) => p.into(),
            ExplorerError::Profile(p) => p.into(),
            ExplorerError::TooLarge(_) => Self::infeasible("space_too_large", e.to_string()),
            ExplorerError::Workers(_) => Self::internal(e.to_string()),
            _ => Self::input("explorer", e.to_string()),
        }
    }
}

impl From<SimulatorError> for CliError {
    fn from(e: SimulatorError) -> Self {
        match e {
            SimulatorError::SpaceTooLarge { .. } => {
                Self::infeasible("space_too_large", e.to_string())
            }
            SimulatorError::Explorer(x) => x.into(),
            SimulatorError::Proxy(p) => p.into(),
            SimulatorError::Workers(_) => Self::internal(e.to_string()),
            _ => Self::input("simulator", e.to_string()),
        }
    }
}

impl From<SelectorError> for CliError {
    fn from(e: SelectorError) -> Self {
        match e {
            SelectorError::InfeasibleBudget(_) => {
                Self::infeasible("infeasible_budget", e.to_string())
            }
            _ => Self::input("selector", e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::input("csv", e.to_string())
    }
}
