//! Structural variants, per-role option lists, and configuration ids.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::ExplorerError;
use crate::profile::SubAgentConfig;
use crate::proxy::RoleAssignment;
use crate::workflow::{
    enumerate_structures, ChoiceId, RoleId, StructuralAssignment, StructuralVariant, WorkflowSpec,
};

/// A sub-space of a workflow's design space.
///
/// `structures`, when present, lists the structural assignments to keep;
/// `options` narrows the configuration list of individual roles. Roles not
/// named keep their full declared space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Restriction {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structures: Option<Vec<BTreeMap<ChoiceId, bool>>>,
    #[serde(default)]
    pub options: BTreeMap<RoleId, Vec<SubAgentConfig>>,
}

impl Restriction {
    pub fn from_json(document: &str) -> Result<Self, ExplorerError> {
        serde_json::from_str(document).map_err(|e| ExplorerError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// Structural variants plus the candidate configurations of every role.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub variants: Vec<StructuralVariant>,
    /// Sorted, duplicate-free option lists.
    pub options: BTreeMap<RoleId, Vec<SubAgentConfig>>,
}

impl SearchSpace {
    /// Every constraint-satisfying structure with every declared configuration.
    pub fn full(spec: &WorkflowSpec) -> Result<Self, ExplorerError> {
        Self::restricted(spec, &Restriction::default())
    }

    pub fn restricted(
        spec: &WorkflowSpec,
        restriction: &Restriction,
    ) -> Result<Self, ExplorerError> {
        let variants = match &restriction.structures {
            None => {
                let e = enumerate_structures(spec);
                if e.unsatisfiable {
                    return Err(ExplorerError::EmptyStructuralSpace);
                }
                e.variants
            }
            Some(list) => {
                let mut variants = Vec::with_capacity(list.len());
                for values in list {
                    let assignment = StructuralAssignment::from_map(values.clone());
                    if !assignment.covers(spec) {
                        return Err(ExplorerError::InvalidStructure {
                            structure: assignment.bits(),
                            reason: "does not name exactly the spec's choices".into(),
                        });
                    }
                    if !assignment.satisfies(spec) {
                        return Err(ExplorerError::InvalidStructure {
                            structure: assignment.bits(),
                            reason: "violates an activation constraint".into(),
                        });
                    }
                    variants.push(StructuralVariant::new(spec, assignment));
                }
                variants.sort_by(|a, b| a.assignment.cmp(&b.assignment));
                if let Some(w) = variants
                    .windows(2)
                    .find(|w| w[0].assignment == w[1].assignment)
                {
                    return Err(ExplorerError::InvalidStructure {
                        structure: w[0].assignment.bits(),
                        reason: "listed twice".into(),
                    });
                }
                if variants.is_empty() {
                    return Err(ExplorerError::EmptyStructuralSpace);
                }
                variants
            }
        };
        if let Some(v) = variants.iter().find(|v| v.active_roles.is_empty()) {
            return Err(ExplorerError::InvalidStructure {
                structure: v.assignment.bits(),
                reason: "leaves no active role".into(),
            });
        }

        let mut options = spec.config_spaces();
        for (role, list) in &restriction.options {
            let declared = options
                .get_mut(role)
                .ok_or_else(|| ExplorerError::UnknownRole(role.clone()))?;
            let mut list = list.clone();
            list.sort();
            list.dedup();
            if list.is_empty() {
                return Err(ExplorerError::EmptyOptions(role.clone()));
            }
            if let Some(c) = list.iter().find(|c| declared.binary_search(c).is_err()) {
                return Err(ExplorerError::UndeclaredOption {
                    role: role.clone(),
                    config: c.clone(),
                });
            }
            *declared = list;
        }
        Ok(Self { variants, options })
    }

    pub fn option_counts(&self) -> BTreeMap<RoleId, u64> {
        self.options
            .iter()
            .map(|(r, o)| (r.clone(), o.len() as u64))
            .collect()
    }

    /// Number of configurations in the space.
    pub fn size(&self) -> BigUint {
        count_variants(&self.variants, &self.option_counts())
            .expect("options cover every declared role")
    }

    /// Materializes every configuration, variant by variant, in odometer order.
    pub fn configurations(&self) -> impl Iterator<Item = WorkflowConfiguration> + '_ {
        self.variants.iter().flat_map(move |v| {
            let lists: Vec<&[SubAgentConfig]> = v
                .active_roles
                .iter()
                .map(|r| self.options[r].as_slice())
                .collect();
            let total: u64 = lists.iter().map(|l| l.len() as u64).product();
            (0..total).map(move |k| {
                let picks = decode(k, &lists);
                let assignment = v
                    .active_roles
                    .iter()
                    .zip(picks.iter().enumerate())
                    .map(|(r, (slot, &i))| (r.clone(), lists[slot][i].clone()))
                    .collect();
                WorkflowConfiguration::new(v.assignment.clone(), assignment)
            })
        })
    }
}

/// Per-slot option indices of odometer position `k`; the last slot turns fastest.
pub(crate) fn decode<T>(mut k: u64, lists: &[&[T]]) -> Vec<usize> {
    let mut picks = vec![0; lists.len()];
    for (slot, list) in lists.iter().enumerate().rev() {
        let n = list.len() as u64;
        picks[slot] = (k % n) as usize;
        k /= n;
    }
    picks
}

pub(crate) fn count_variants(
    variants: &[StructuralVariant],
    counts: &BTreeMap<RoleId, u64>,
) -> Result<BigUint, ExplorerError> {
    let mut total = BigUint::from(0u32);
    for v in variants {
        let mut product = BigUint::from(1u32);
        for role in &v.active_roles {
            let n = counts
                .get(role)
                .ok_or_else(|| ExplorerError::UnknownRole(role.clone()))?;
            product *= *n;
        }
        total += product;
    }
    Ok(total)
}

/// Number of configurations of `spec` when each role has `counts[role]` options.
pub fn count_configurations(
    spec: &WorkflowSpec,
    counts: &BTreeMap<RoleId, u64>,
) -> Result<BigUint, ExplorerError> {
    count_variants(&enumerate_structures(spec).variants, counts)
}

/// One point of the design space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorkflowConfiguration {
    /// Canonical encoding of structure and assignment.
    pub id: String,
    pub structural: StructuralAssignment,
    pub assignment: RoleAssignment,
}

impl WorkflowConfiguration {
    pub fn new(structural: StructuralAssignment, assignment: RoleAssignment) -> Self {
        let id = canonical_id(&structural, &assignment);
        Self {
            id,
            structural,
            assignment,
        }
    }
}

/// `bits|role=model@budget;role=model@budget;...` with roles in canonical order.
pub fn canonical_id(structural: &StructuralAssignment, assignment: &RoleAssignment) -> String {
    let mut id = structural.bits();
    id.push('|');
    for (i, (role, config)) in assignment.iter().enumerate() {
        if i > 0 {
            id.push(';');
        }
        id.push_str(role.as_str());
        id.push('=');
        id.push_str(&config.to_string());
    }
    id
}
