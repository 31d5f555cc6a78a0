//! Per-role dominance pruning.

use std::collections::BTreeMap;

use super::{Profile, ProfileError, ProfileTable};
use crate::explorer::frontier_sweep;
use crate::workflow::RoleId;

/// Options of one role that survive dominance pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedOptionSet {
    pub role: RoleId,
    /// Strict staircase: latency and accuracy both strictly increasing.
    pub kept: Vec<Profile>,
    pub dropped_count: usize,
}

impl PrunedOptionSet {
    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn before_count(&self) -> usize {
        self.kept.len() + self.dropped_count
    }
}

/// Prunes the profiles of `role` in `table`.
pub fn prune_dominated(
    table: &ProfileTable,
    role: &RoleId,
    epsilon: f64,
) -> Result<PrunedOptionSet, ProfileError> {
    let profiles: Vec<Profile> = table.role_profiles(role).cloned().collect();
    if profiles.is_empty() {
        return Err(ProfileError::UnknownRole(role.clone()));
    }
    prune_profiles(role.clone(), profiles, epsilon)
}

/// Prunes an arbitrary list of profiles belonging to one role.
///
/// Exact ties keep the smallest `(model, budget)`.
pub fn prune_profiles(
    role: RoleId,
    mut profiles: Vec<Profile>,
    epsilon: f64,
) -> Result<PrunedOptionSet, ProfileError> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(ProfileError::InvalidEpsilon(epsilon));
    }
    profiles.sort_by(|a, b| a.config.cmp(&b.config));
    let points: Vec<(f64, f64)> = profiles.iter().map(|p| (p.accuracy, p.latency)).collect();
    let keep = frontier_sweep(&points, epsilon, |a, b| a.cmp(&b));
    let kept: Vec<Profile> = keep.iter().map(|&i| profiles[i].clone()).collect();
    Ok(PrunedOptionSet {
        role,
        dropped_count: profiles.len() - kept.len(),
        kept,
    })
}

/// Prunes every role present in `table`.
pub fn prune_all(
    table: &ProfileTable,
    epsilon: f64,
) -> Result<BTreeMap<RoleId, PrunedOptionSet>, ProfileError> {
    table
        .roles()
        .into_iter()
        .map(|role| prune_dominated(table, &role, epsilon).map(|set| (role, set)))
        .collect()
}
