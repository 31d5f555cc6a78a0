//! Profile-table JSON and CSV documents.

use serde::{Deserialize, Serialize};

use super::{Profile, ProfileError, ProfileTable, SubAgentConfig, TableMetadata};
use crate::workflow::RoleId;

pub const PROFILE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ProfileRow {
    pub role: RoleId,
    pub model: String,
    pub budget: u32,
    pub accuracy: f64,
    pub latency_s: f64,
    #[serde(default = "one")]
    pub sample_count: u32,
}

fn one() -> u32 {
    1
}

impl From<ProfileRow> for Profile {
    fn from(row: ProfileRow) -> Self {
        Profile {
            role: row.role,
            config: SubAgentConfig::new(row.model, row.budget),
            accuracy: row.accuracy,
            latency: row.latency_s,
            sample_count: row.sample_count,
        }
    }
}

impl From<&Profile> for ProfileRow {
    fn from(p: &Profile) -> Self {
        ProfileRow {
            role: p.role.clone(),
            model: p.config.model.clone(),
            budget: p.config.budget,
            accuracy: p.accuracy,
            latency_s: p.latency,
            sample_count: p.sample_count,
        }
    }
}

#[derive(Deserialize)]
struct RawTable {
    format_version: u32,
    #[serde(default)]
    source: String,
    #[serde(default)]
    created: Option<String>,
    entries: Vec<ProfileRow>,
}

#[derive(Serialize)]
struct TableRef<'a> {
    format_version: u32,
    source: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    created: Option<&'a str>,
    entries: Vec<ProfileRow>,
}

pub(crate) fn json_error(e: serde_json::Error) -> ProfileError {
    ProfileError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a profile-table JSON document.
pub fn load_profiles(document: &str) -> Result<ProfileTable, ProfileError> {
    let raw: RawTable = serde_json::from_str(document).map_err(json_error)?;
    if raw.format_version != PROFILE_FORMAT_VERSION {
        return Err(ProfileError::UnsupportedVersion(raw.format_version));
    }
    let mut table =
        ProfileTable::from_profiles(raw.source, raw.entries.into_iter().map(Profile::from))?;
    table.metadata.created = raw.created;
    Ok(table)
}

/// Parses a CSV profile table with the JSON entry columns as header.
pub fn load_profiles_csv(
    document: &str,
    source: impl Into<String>,
) -> Result<ProfileTable, ProfileError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(document.as_bytes());
    let mut table = ProfileTable::new(source);
    for row in reader.deserialize::<ProfileRow>() {
        let row = row.map_err(|e| ProfileError::Csv(e.to_string()))?;
        table.insert(row.into())?;
    }
    Ok(table)
}

impl ProfileTable {
    /// Pretty JSON with entries in canonical order.
    pub fn to_json(&self) -> String {
        let TableMetadata {
            format_version,
            source,
            created,
        } = &self.metadata;
        let doc = TableRef {
            format_version: *format_version,
            source,
            created: created.as_deref(),
            entries: self.iter().map(ProfileRow::from).collect(),
        };
        let mut s =
            serde_json::to_string_pretty(&doc).expect("profile serialization is infallible");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for p in self.iter() {
            writer
                .serialize(ProfileRow::from(p))
                .expect("in-memory csv write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }
}
