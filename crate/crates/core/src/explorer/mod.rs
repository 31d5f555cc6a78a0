//! Design-space enumeration and compiled trade-off sets.

mod artifact;
mod frontier;
mod space;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::profile::{
    prune_profiles, Profile, ProfileError, ProfileTable, PrunedOptionSet, SubAgentConfig,
};
use crate::proxy::{
    AnalyticProxy, CompiledGraph, CompositionProxy, Estimate, ExecutionModel, LeafStats, ProxyError,
};
use crate::workflow::{RoleId, StructuralVariant, WorkflowSpec};

pub use artifact::{
    load_compiled_set, save_compiled_set, CompiledEntry, CompiledMetadata, CompiledSet,
    RoleReduction, COMPILED_FORMAT_VERSION,
};
pub(crate) use frontier::frontier_sweep;
pub use frontier::{nondominated_sort_2d, FrontierPoint};
use frontier::{Candidate, FrontierAccumulator};
pub use space::{
    canonical_id, count_configurations, Restriction, SearchSpace, WorkflowConfiguration,
};

#[derive(Debug, Error, PartialEq)]
pub enum ExplorerError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unsupported compiled-set format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid compiled set: {0}")]
    InvalidArtifact(String),
    #[error("no profile for role `{role}` under {config}")]
    MissingProfile {
        role: RoleId,
        config: SubAgentConfig,
    },
    #[error("no option count or declared space for role `{0}`")]
    UnknownRole(RoleId),
    #[error("restriction gives role `{0}` no options")]
    EmptyOptions(RoleId),
    #[error("restricted option {config} is not declared for role `{role}`")]
    UndeclaredOption {
        role: RoleId,
        config: SubAgentConfig,
    },
    #[error("structure {structure}: {reason}")]
    InvalidStructure { structure: String, reason: String },
    #[error("no structural assignment satisfies the activation constraints")]
    EmptyStructuralSpace,
    #[error("non-finite value in point `{0}`")]
    NonFinite(String),
    #[error("epsilon must be a finite nonnegative number, got {0}")]
    InvalidEpsilon(f64),
    #[error("search space of {0} configurations is too large to enumerate")]
    TooLarge(String),
    #[error("could not start worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreOptions {
    pub exec: ExecutionModel,
    /// Accuracy/latency slack of the final frontier filter.
    pub epsilon: f64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Drop locally dominated role options before enumeration.
    pub prune: bool,
    pub restriction: Option<Restriction>,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self {
            exec: ExecutionModel::SequentialEdge,
            epsilon: 0.0,
            workers: None,
            prune: true,
            restriction: None,
        }
    }
}

/// Per-role option counts and the implied space sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStats {
    pub roles: BTreeMap<RoleId, RoleReduction>,
    pub full_space: BigUint,
    pub pruned_space: BigUint,
}

/// Space sizes before and after per-role pruning.
pub fn reduction_report(
    spec: &WorkflowSpec,
    before: &ProfileTable,
    after: &BTreeMap<RoleId, PrunedOptionSet>,
) -> Result<ReductionStats, ExplorerError> {
    let before_counts = before.role_counts();
    let after_counts: BTreeMap<RoleId, u64> = after
        .iter()
        .map(|(r, s)| (r.clone(), s.kept.len() as u64))
        .collect();
    let roles = before_counts
        .iter()
        .map(|(r, &n)| {
            let kept = after_counts
                .get(r)
                .ok_or_else(|| ExplorerError::UnknownRole(r.clone()))?;
            Ok((
                r.clone(),
                RoleReduction {
                    before: n,
                    after: *kept,
                },
            ))
        })
        .collect::<Result<_, ExplorerError>>()?;
    Ok(ReductionStats {
        roles,
        full_space: count_configurations(spec, &before_counts)?,
        pruned_space: count_configurations(spec, &after_counts)?,
    })
}

/// Builds the compiled non-dominated set with the analytical proxy.
pub fn explore(
    spec: &WorkflowSpec,
    table: &ProfileTable,
    options: &ExploreOptions,
) -> Result<CompiledSet, ExplorerError> {
    explore_with(spec, table, options, &AnalyticProxy)
}

/// Builds the compiled non-dominated set with a caller-supplied proxy.
pub fn explore_with(
    spec: &WorkflowSpec,
    table: &ProfileTable,
    options: &ExploreOptions,
    proxy: &dyn CompositionProxy,
) -> Result<CompiledSet, ExplorerError> {
    if !(options.epsilon >= 0.0 && options.epsilon.is_finite()) {
        return Err(ExplorerError::InvalidEpsilon(options.epsilon));
    }
    let restriction = options.restriction.clone().unwrap_or_default();
    let space = SearchSpace::restricted(spec, &restriction)?;
    let in_use: BTreeSet<&RoleId> = space
        .variants
        .iter()
        .flat_map(|v| &v.active_roles)
        .collect();

    let mut kept: BTreeMap<RoleId, Vec<Profile>> = BTreeMap::new();
    let mut roles = BTreeMap::new();
    for role in in_use {
        let profiles = space.options[role]
            .iter()
            .map(|config| {
                table
                    .get(role, config)
                    .cloned()
                    .ok_or_else(|| ExplorerError::MissingProfile {
                        role: role.clone(),
                        config: config.clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let before = profiles.len() as u64;
        let list = if options.prune {
            prune_profiles(role.clone(), profiles, 0.0)?.kept
        } else {
            profiles
        };
        roles.insert(
            role.clone(),
            RoleReduction {
                before,
                after: list.len() as u64,
            },
        );
        kept.insert(role.clone(), list);
    }

    let full_space = space.size();
    let kept_counts = kept
        .iter()
        .map(|(r, l)| (r.clone(), l.len() as u64))
        .collect();
    let pruned_space = space::count_variants(&space.variants, &kept_counts)?;
    let explored_count = u64::try_from(&pruned_space)
        .map_err(|_| ExplorerError::TooLarge(pruned_space.to_string()))?;

    let jobs: Vec<VariantJob> = space
        .variants
        .iter()
        .map(|v| VariantJob::new(v, &kept))
        .collect::<Result<_, _>>()?;
    let run = || -> Vec<Vec<Candidate>> {
        jobs.par_iter()
            .map(|job| job.frontier(proxy, options.exec))
            .collect()
    };
    let per_variant = match options.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ExplorerError::Workers(e.to_string()))?
            .install(run),
        None => run(),
    };

    let pooled: Vec<(usize, Candidate)> = per_variant
        .into_iter()
        .enumerate()
        .flat_map(|(v, cands)| cands.into_iter().map(move |c| (v, c)))
        .collect();
    let xy: Vec<(f64, f64)> = pooled
        .iter()
        .map(|(_, c)| (c.accuracy, c.latency))
        .collect();
    let keep = frontier_sweep(&xy, options.epsilon, |a, b| {
        let (va, ca) = pooled[a];
        let (vb, cb) = pooled[b];
        jobs[va].id(ca.key).cmp(&jobs[vb].id(cb.key))
    });
    let entries = keep
        .into_iter()
        .map(|i| {
            let (v, c) = pooled[i];
            CompiledEntry {
                config: jobs[v].configuration(c.key),
                estimate: Estimate::new(c.accuracy, c.latency),
            }
        })
        .collect();

    Ok(CompiledSet {
        metadata: CompiledMetadata {
            tool_version: crate::TOOL_VERSION.to_owned(),
            spec_name: spec.name.clone(),
            profile_source: table.metadata.source.clone(),
            execution_model: options.exec,
            proxy_version: proxy.version().to_owned(),
            epsilon: options.epsilon,
            restricted: options.restriction.is_some(),
            full_space_size: full_space.to_string(),
            pruned_space_size: pruned_space.to_string(),
            explored_count,
            roles,
        },
        entries,
    })
}

/// One structural variant with its per-slot option lists.
struct VariantJob<'a> {
    variant: &'a StructuralVariant,
    graph: CompiledGraph,
    lists: Vec<&'a [Profile]>,
    stats: Vec<Vec<LeafStats>>,
}

impl<'a> VariantJob<'a> {
    fn new(
        variant: &'a StructuralVariant,
        kept: &'a BTreeMap<RoleId, Vec<Profile>>,
    ) -> Result<Self, ExplorerError> {
        let graph = CompiledGraph::new(variant.graph.as_ref().expect("variant has active roles"))?;
        let lists: Vec<&[Profile]> = graph.roles().iter().map(|r| kept[r].as_slice()).collect();
        let stats = lists
            .iter()
            .map(|l| {
                l.iter()
                    .map(|p| LeafStats {
                        accuracy: p.accuracy,
                        latency: p.latency,
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            variant,
            graph,
            lists,
            stats,
        })
    }

    fn configuration(&self, key: u64) -> WorkflowConfiguration {
        let picks = space::decode(key, &self.lists);
        let assignment = self
            .graph
            .roles()
            .iter()
            .zip(picks.iter().enumerate())
            .map(|(r, (slot, &i))| (r.clone(), self.lists[slot][i].config.clone()))
            .collect();
        WorkflowConfiguration::new(self.variant.assignment.clone(), assignment)
    }

    fn id(&self, key: u64) -> String {
        self.configuration(key).id
    }

    /// Exact frontier of this variant's candidates; keys are odometer positions.
    fn frontier(&self, proxy: &dyn CompositionProxy, exec: ExecutionModel) -> Vec<Candidate> {
        let n = self.lists.len();
        let mut picks = vec![0usize; n];
        let mut leaves: Vec<LeafStats> = self.stats.iter().map(|s| s[0]).collect();
        let mut acc = FrontierAccumulator::new(|a: u64, b: u64| -> Ordering {
            if a == b {
                Ordering::Equal
            } else {
                self.id(a).cmp(&self.id(b))
            }
        });
        let mut key = 0u64;
        loop {
            let est = proxy.evaluate(&self.graph, &leaves, exec);
            acc.offer(Candidate {
                accuracy: est.accuracy,
                latency: est.latency,
                key,
            });
            key += 1;
            let mut slot = n;
            loop {
                if slot == 0 {
                    return acc.finish();
                }
                slot -= 1;
                picks[slot] += 1;
                if picks[slot] < self.stats[slot].len() {
                    leaves[slot] = self.stats[slot][picks[slot]];
                    break;
                }
                picks[slot] = 0;
                leaves[slot] = self.stats[slot][0];
            }
        }
    }
}
