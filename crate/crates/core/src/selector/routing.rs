//! Per-query nearest-neighbor routing over a compiled set.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax_by, expected_utility, Preference, SelectorError, UtilityContext};
use crate::explorer::{CompiledEntry, CompiledSet};

pub const DEFAULT_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingOutcome {
    pub success: bool,
    pub latency_s: f64,
}

/// Features of one validation query and how each compiled configuration fared on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingRecord {
    pub features: Vec<f64>,
    pub outcomes: BTreeMap<String, RoutingOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingRecords {
    pub dim: usize,
    pub records: Vec<RoutingRecord>,
}

impl RoutingRecords {
    pub fn from_json(document: &str) -> Result<Self, SelectorError> {
        let records: Self = serde_json::from_str(document).map_err(|e| SelectorError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if let Some(r) = records
            .records
            .iter()
            .find(|r| r.features.len() != records.dim)
        {
            return Err(SelectorError::DimensionMismatch {
                expected: records.dim,
                got: r.features.len(),
            });
        }
        Ok(records)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    /// Checks that every outcome names an entry of `set`.
    pub fn check_against(&self, set: &CompiledSet) -> Result<(), SelectorError> {
        for (i, r) in self.records.iter().enumerate() {
            if let Some(id) = r.outcomes.keys().find(|id| set.get(id).is_none()) {
                return Err(SelectorError::UnknownConfig {
                    record: i,
                    id: id.clone(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteDecision<'a> {
    pub entry: &'a CompiledEntry,
    /// Mean neighbor utility of the chosen entry.
    pub utility: f64,
    /// Record indices of the neighbors, nearest first.
    pub neighbors: Vec<usize>,
    /// Present when `k` exceeded the number of records.
    pub warning: Option<String>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Routes one query to the entry with the best mean utility among its `k` nearest records.
pub fn knn_route<'a>(
    query: &[f64],
    records: &[RoutingRecord],
    set: &'a CompiledSet,
    k: usize,
    pref: Preference,
    ctx: UtilityContext,
) -> Result<RouteDecision<'a>, SelectorError> {
    if k == 0 {
        return Err(SelectorError::ZeroK);
    }
    if records.is_empty() {
        return Err(SelectorError::NoRecords);
    }
    if let Some(r) = records.iter().find(|r| r.features.len() != query.len()) {
        return Err(SelectorError::DimensionMismatch {
            expected: r.features.len(),
            got: query.len(),
        });
    }
    let warning = (k > records.len()).then(|| {
        format!(
            "k = {k} exceeds the {} available records; using all of them",
            records.len()
        )
    });
    let k = k.min(records.len());
    let mut order: Vec<(f64, usize)> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (squared_distance(query, &r.features), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let neighbors: Vec<usize> = order[..k].iter().map(|&(_, i)| i).collect();

    let best = argmax_by(&set.entries, |e| {
        let mut total = 0.0;
        let mut n = 0usize;
        for &i in &neighbors {
            if let Some(o) = records[i].outcomes.get(&e.config.id) {
                let acc = if o.success { 1.0 } else { 0.0 };
                total += expected_utility(acc, o.latency_s, pref, ctx)?;
                n += 1;
            }
        }
        Ok((n > 0).then(|| total / n as f64))
    })?;
    let (i, utility) = best.ok_or(SelectorError::NoOutcomes)?;
    Ok(RouteDecision {
        entry: &set.entries[i],
        utility,
        neighbors,
        warning,
    })
}

/// Routes each query independently, in parallel; results keep query order.
pub fn knn_route_many<'a>(
    queries: &[Vec<f64>],
    records: &[RoutingRecord],
    set: &'a CompiledSet,
    k: usize,
    pref: Preference,
    ctx: UtilityContext,
) -> Vec<Result<RouteDecision<'a>, SelectorError>> {
    queries
        .par_iter()
        .map(|q| knn_route(q, records, set, k, pref, ctx))
        .collect()
}
