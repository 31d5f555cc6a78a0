//! Compiled trade-off set and its JSON artifact.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::space::canonical_id;
use super::{ExplorerError, WorkflowConfiguration};
use crate::profile::SubAgentConfig;
use crate::proxy::{Estimate, ExecutionModel};
use crate::workflow::{ChoiceId, RoleId, StructuralAssignment};

pub const COMPILED_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleReduction {
    pub before: u64,
    pub after: u64,
}

/// Provenance of a compiled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompiledMetadata {
    pub tool_version: String,
    pub spec_name: String,
    pub profile_source: String,
    pub execution_model: ExecutionModel,
    pub proxy_version: String,
    pub epsilon: f64,
    pub restricted: bool,
    /// Decimal; may exceed 64 bits.
    pub full_space_size: String,
    pub pruned_space_size: String,
    pub explored_count: u64,
    pub roles: BTreeMap<RoleId, RoleReduction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledEntry {
    pub config: WorkflowConfiguration,
    pub estimate: Estimate,
}

/// Non-dominated configurations sorted by estimated latency.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledSet {
    pub metadata: CompiledMetadata,
    pub entries: Vec<CompiledEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    id: String,
    structural: BTreeMap<ChoiceId, bool>,
    assignment: BTreeMap<RoleId, SubAgentConfig>,
    est_accuracy: f64,
    est_latency_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetDoc {
    format_version: u32,
    metadata: CompiledMetadata,
    entries: Vec<EntryDoc>,
}

impl CompiledSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CompiledEntry> {
        self.entries.iter().find(|e| e.config.id == id)
    }

    pub fn to_json(&self) -> String {
        let doc = SetDoc {
            format_version: COMPILED_FORMAT_VERSION,
            metadata: self.metadata.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryDoc {
                    id: e.config.id.clone(),
                    structural: e.config.structural.values().clone(),
                    assignment: e.config.assignment.clone(),
                    est_accuracy: e.estimate.accuracy,
                    est_latency_s: e.estimate.latency,
                })
                .collect(),
        };
        let mut s =
            serde_json::to_string_pretty(&doc).expect("artifact serialization is infallible");
        s.push('\n');
        s
    }

    /// Parses and validates an artifact.
    pub fn from_json(document: &str) -> Result<Self, ExplorerError> {
        let doc: SetDoc = serde_json::from_str(document).map_err(|e| ExplorerError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if doc.format_version != COMPILED_FORMAT_VERSION {
            return Err(ExplorerError::UnsupportedVersion(doc.format_version));
        }
        let entries = doc
            .entries
            .into_iter()
            .map(|e| {
                let structural = StructuralAssignment::from_map(e.structural);
                let expected = canonical_id(&structural, &e.assignment);
                if expected != e.id {
                    return Err(ExplorerError::InvalidArtifact(format!(
                        "entry id `{}` does not match its contents (expected `{expected}`)",
                        e.id
                    )));
                }
                Ok(CompiledEntry {
                    config: WorkflowConfiguration {
                        id: e.id,
                        structural,
                        assignment: e.assignment,
                    },
                    estimate: Estimate::new(e.est_accuracy, e.est_latency_s),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let set = Self {
            metadata: doc.metadata,
            entries,
        };
        set.validate()?;
        Ok(set)
    }

    /// Checks the staircase invariant, id uniqueness, and estimate ranges.
    pub fn validate(&self) -> Result<(), ExplorerError> {
        let invalid = |msg: String| Err(ExplorerError::InvalidArtifact(msg));
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !e.estimate.is_valid() {
                return invalid(format!(
                    "entry `{}` has an out-of-range estimate",
                    e.config.id
                ));
            }
            if !ids.insert(&e.config.id) {
                return invalid(format!("duplicate entry `{}`", e.config.id));
            }
        }
        for w in self.entries.windows(2) {
            let (a, b) = (&w[0].estimate, &w[1].estimate);
            if !(a.latency < b.latency && a.accuracy < b.accuracy) {
                return invalid(format!(
                    "entries `{}` and `{}` break the non-dominated latency ordering",
                    w[0].config.id, w[1].config.id
                ));
            }
        }
        Ok(())
    }

    /// Warning text when the set was compiled under a different execution model.
    pub fn execution_model_warning(&self, exec: ExecutionModel) -> Option<String> {
        (self.metadata.execution_model != exec).then(|| {
            format!(
                "compiled set was built for the {} execution model but is used under {}",
                self.metadata.execution_model, exec
            )
        })
    }
}

pub fn save_compiled_set(set: &CompiledSet, path: impl AsRef<Path>) -> Result<(), ExplorerError> {
    let path = path.as_ref();
    std::fs::write(path, set.to_json()).map_err(|e| ExplorerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_compiled_set(path: impl AsRef<Path>) -> Result<CompiledSet, ExplorerError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ExplorerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    CompiledSet::from_json(&text)
}
