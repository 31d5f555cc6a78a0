//! CSV output and the measurement table.

use std::collections::BTreeMap;
use std::path::Path;

use wfc_core::simulator::MeasuredPoint;

use crate::error::CliError;

pub const TABLE_FORMAT_VERSION: u32 = 1;

/// First line of every CSV the tool writes; readers skip `#` lines.
pub fn banner(kind: &str, extra: &[(&str, String)]) -> String {
    let mut line = format!(
        "# wfc {kind} format_version={TABLE_FORMAT_VERSION} tool_version={}",
        wfc_core::TOOL_VERSION
    );
    for (k, v) in extra {
        line.push_str(&format!(" {k}={v}"));
    }
    line.push('\n');
    line
}

/// Serializes rows under a banner line.
pub fn to_csv<T: serde::Serialize>(
    kind: &str,
    extra: &[(&str, String)],
    rows: &[T],
) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::internal(e.to_string()))?;
    let mut out = banner(kind, extra);
    out.push_str(&String::from_utf8(body).map_err(|e| CliError::internal(e.to_string()))?);
    Ok(out)
}

pub fn measurements_csv(points: &[MeasuredPoint]) -> Result<String, CliError> {
    to_csv("measurements", &[], points)
}

/// Reads a measurement CSV keyed by configuration id. An empty file gives an empty map.
pub fn read_measurements(path: &Path) -> Result<BTreeMap<String, MeasuredPoint>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    parse_measurements(&text)
        .map_err(|e| CliError::input("measurements", format!("{}: {}", path.display(), e.message)))
}

pub fn parse_measurements(text: &str) -> Result<BTreeMap<String, MeasuredPoint>, CliError> {
    let mut out = BTreeMap::new();
    if text
        .lines()
        .all(|l| l.trim().is_empty() || l.starts_with('#'))
    {
        return Ok(out);
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for row in reader.deserialize() {
        let p: MeasuredPoint = row?;
        if !(p.accuracy >= 0.0 && p.accuracy <= 1.0 && p.latency >= 0.0 && p.latency.is_finite()) {
            return Err(CliError::input(
                "measurements",
                format!("row `{}` has out-of-range values", p.id),
            ));
        }
        if out.insert(p.id.clone(), p).is_some() {
            return Err(CliError::input(
                "measurements",
                "duplicate configuration id",
            ));
        }
    }
    Ok(out)
}
