//! Sub-agent profiles and per-role dominance pruning.

mod io;
mod prune;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workflow::RoleId;

pub use io::{load_profiles, load_profiles_csv, PROFILE_FORMAT_VERSION};
pub use prune::{prune_all, prune_dominated, prune_profiles, PrunedOptionSet};

/// One `(model, reasoning budget)` choice for a sub-agent role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubAgentConfig {
    pub model: String,
    pub budget: u32,
}

impl SubAgentConfig {
    pub fn new(model: impl Into<String>, budget: u32) -> Self {
        Self {
            model: model.into(),
            budget,
        }
    }
}

impl fmt::Display for SubAgentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.model, self.budget)
    }
}

/// Profiled accuracy and mean latency of one role under one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub role: RoleId,
    pub config: SubAgentConfig,
    pub accuracy: f64,
    /// Seconds.
    pub latency: f64,
    /// Size of the profiling set; carried for display only.
    pub sample_count: u32,
}

impl Profile {
    pub fn new(
        role: impl Into<RoleId>,
        config: SubAgentConfig,
        accuracy: f64,
        latency: f64,
    ) -> Self {
        Self {
            role: role.into(),
            config,
            accuracy,
            latency,
            sample_count: 1,
        }
    }

    fn validate(&self) -> Result<(), ProfileError> {
        let out_of_range = |field: &'static str, value: f64| ProfileError::OutOfRange {
            role: self.role.clone(),
            config: self.config.clone(),
            field,
            value,
        };
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(out_of_range("accuracy", self.accuracy));
        }
        if !(self.latency >= 0.0 && self.latency.is_finite()) {
            return Err(out_of_range("latency_s", self.latency));
        }
        if self.config.budget == 0 {
            return Err(out_of_range("budget", 0.0));
        }
        if self.sample_count == 0 {
            return Err(out_of_range("sample_count", 0.0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub format_version: u32,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

impl Default for TableMetadata {
    fn default() -> Self {
        Self {
            format_version: PROFILE_FORMAT_VERSION,
            source: String::new(),
            created: None,
        }
    }
}

/// Component-level cost model: one profile per `(role, config)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfileTable {
    entries: BTreeMap<(RoleId, SubAgentConfig), Profile>,
    pub metadata: TableMetadata,
}

impl ProfileTable {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            entries: BTreeMap::new(),
            metadata: TableMetadata {
                source: source.into(),
                ..TableMetadata::default()
            },
        }
    }

    /// Validates and inserts a profile; duplicate keys are rejected.
    pub fn insert(&mut self, profile: Profile) -> Result<(), ProfileError> {
        profile.validate()?;
        let key = (profile.role.clone(), profile.config.clone());
        if self.entries.contains_key(&key) {
            return Err(ProfileError::Duplicate {
                role: key.0,
                config: key.1,
            });
        }
        self.entries.insert(key, profile);
        Ok(())
    }

    pub fn from_profiles(
        source: impl Into<String>,
        profiles: impl IntoIterator<Item = Profile>,
    ) -> Result<Self, ProfileError> {
        let mut table = Self::new(source);
        for p in profiles {
            table.insert(p)?;
        }
        Ok(table)
    }

    pub fn get(&self, role: &RoleId, config: &SubAgentConfig) -> Option<&Profile> {
        self.entries.get(&(role.clone(), config.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All profiles in canonical `(role, model, budget)` order.
    pub fn iter(&self) -> impl Iterator<Item = &Profile> {
        self.entries.values()
    }

    /// Profiles of one role in canonical config order.
    pub fn role_profiles<'a>(&'a self, role: &'a RoleId) -> impl Iterator<Item = &'a Profile> + 'a {
        self.entries
            .range((role.clone(), SubAgentConfig::new("", 0))..)
            .take_while(move |((r, _), _)| r == role)
            .map(|(_, p)| p)
    }

    pub fn roles(&self) -> Vec<RoleId> {
        let mut roles: Vec<RoleId> = self.entries.keys().map(|(r, _)| r.clone()).collect();
        roles.dedup();
        roles
    }

    /// Number of profiled configurations per role.
    pub fn role_counts(&self) -> BTreeMap<RoleId, u64> {
        let mut counts = BTreeMap::new();
        for (role, _) in self.entries.keys() {
            *counts.entry(role.clone()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("unsupported profile format version {0}")]
    UnsupportedVersion(u32),
    #[error("{field} = {value} out of range for role `{role}`, config {config}")]
    OutOfRange {
        role: RoleId,
        config: SubAgentConfig,
        field: &'static str,
        value: f64,
    },
    #[error("duplicate profile for role `{role}`, config {config}")]
    Duplicate {
        role: RoleId,
        config: SubAgentConfig,
    },
    #[error("no profiles for role `{0}`")]
    UnknownRole(RoleId),
    #[error("epsilon must be a finite nonnegative number, got {0}")]
    InvalidEpsilon(f64),
}
