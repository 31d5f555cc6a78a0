//! Ground-truth scenarios for simulation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SimulatorError;
use crate::profile::{ProfileTable, SubAgentConfig};
use crate::workflow::RoleId;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatencyModel {
    /// Every call takes exactly the entry latency.
    #[default]
    Deterministic,
    /// Log-normal with the entry latency as median and the scenario `cv`.
    LogNormal,
}

/// True behaviour of one role under one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafTruth {
    pub success_prob: f64,
    /// Seconds; the median under [`LatencyModel::LogNormal`].
    pub latency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthScenario {
    pub source: String,
    pub entries: BTreeMap<(RoleId, SubAgentConfig), LeafTruth>,
    pub latency_model: LatencyModel,
    pub cv: f64,
    /// Probability that one query shares a single latent draw across all leaves.
    pub correlation: f64,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    role: RoleId,
    model: String,
    budget: u32,
    accuracy: f64,
    latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_count: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    format_version: u32,
    #[serde(default)]
    source: String,
    #[serde(default)]
    created: Option<String>,
    #[serde(default)]
    latency_model: LatencyModel,
    #[serde(default)]
    cv: f64,
    #[serde(default)]
    correlation: f64,
    seed: u64,
    entries: Vec<EntryDoc>,
}

impl TruthScenario {
    /// Scenario whose truth equals the profile table.
    pub fn matching(
        table: &ProfileTable,
        latency_model: LatencyModel,
        cv: f64,
        correlation: f64,
        seed: u64,
    ) -> Result<Self, SimulatorError> {
        let scenario = Self {
            source: format!("matching:{}", table.metadata.source),
            entries: table
                .iter()
                .map(|p| {
                    (
                        (p.role.clone(), p.config.clone()),
                        LeafTruth {
                            success_prob: p.accuracy,
                            latency: p.latency,
                        },
                    )
                })
                .collect(),
            latency_model,
            cv,
            correlation,
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn get(&self, role: &RoleId, config: &SubAgentConfig) -> Option<&LeafTruth> {
        self.entries.get(&(role.clone(), config.clone()))
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        let bad = |msg: String| Err(SimulatorError::InvalidScenario(msg));
        if !(self.cv >= 0.0 && self.cv.is_finite()) {
            return bad(format!(
                "cv must be finite and nonnegative, got {}",
                self.cv
            ));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return bad(format!(
                "correlation must lie in [0, 1), got {}",
                self.correlation
            ));
        }
        for ((role, config), t) in &self.entries {
            if !(0.0..=1.0).contains(&t.success_prob) {
                return bad(format!(
                    "accuracy {} out of range for `{role}` under {config}",
                    t.success_prob
                ));
            }
            if !(t.latency >= 0.0 && t.latency.is_finite()) {
                return bad(format!(
                    "latency_s {} out of range for `{role}` under {config}",
                    t.latency
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(document: &str) -> Result<Self, SimulatorError> {
        let doc: ScenarioDoc =
            serde_json::from_str(document).map_err(|e| SimulatorError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        if doc.format_version != SCENARIO_FORMAT_VERSION {
            return Err(SimulatorError::InvalidScenario(format!(
                "unsupported format version {}",
                doc.format_version
            )));
        }
        let mut entries = BTreeMap::new();
        for e in doc.entries {
            let key = (e.role, SubAgentConfig::new(e.model, e.budget));
            let truth = LeafTruth {
                success_prob: e.accuracy,
                latency: e.latency_s,
            };
            if entries.insert(key.clone(), truth).is_some() {
                return Err(SimulatorError::InvalidScenario(format!(
                    "duplicate entry for `{}` under {}",
                    key.0, key.1
                )));
            }
        }
        let scenario = Self {
            source: doc.source,
            entries,
            latency_model: doc.latency_model,
            cv: doc.cv,
            correlation: doc.correlation,
            seed: doc.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        let doc = ScenarioDoc {
            format_version: SCENARIO_FORMAT_VERSION,
            source: self.source.clone(),
            created: None,
            latency_model: self.latency_model,
            cv: self.cv,
            correlation: self.correlation,
            seed: self.seed,
            entries: self
                .entries
                .iter()
                .map(|((role, config), t)| EntryDoc {
                    role: role.clone(),
                    model: config.model.clone(),
                    budget: config.budget,
                    accuracy: t.success_prob,
                    latency_s: t.latency,
                    sample_count: None,
                })
                .collect(),
        };
        let mut s =
            serde_json::to_string_pretty(&doc).expect("scenario serialization is infallible");
        s.push('\n');
        s
    }
}
