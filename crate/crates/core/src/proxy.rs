//! Compositional accuracy/latency estimation.
//!
//! Leaf profiles are combined bottom-up:
//!
//! | node | accuracy | latency (sequential edge) | latency (critical path) |
//! |------|----------|---------------------------|-------------------------|
//! | `Seq` | product | sum | sum |
//! | `And` | product | sum | max |
//! | `Or` | `1 - prod(1 - p)` | sum | max |
//! | `Cond` | `p1 + (1 - p1) p2` | `l1 + (1 - p1) l2` | same |
//!
//! Graphs must be unrolled and free of `Optional` nodes; see
//! [`crate::workflow::residual_graph`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{ProfileTable, SubAgentConfig};
use crate::workflow::{residual_graph, RoleId, StructuralAssignment, WorkflowNode, WorkflowSpec};

/// Configuration assigned to each active role.
pub type RoleAssignment = BTreeMap<RoleId, SubAgentConfig>;

/// Version tag of the analytical composition rules.
pub const ANALYTIC_PROXY_VERSION: &str = "analytic-v1";

/// How latencies of parallel branches combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionModel {
    /// Every call is queued on one device, so branch latencies add up.
    #[default]
    SequentialEdge,
    /// Parallel branches overlap; the slowest one counts.
    CriticalPath,
}

impl ExecutionModel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SequentialEdge => "sequential-edge",
            Self::CriticalPath => "critical-path",
        }
    }
}

impl fmt::Display for ExecutionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExecutionModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential-edge" => Ok(Self::SequentialEdge),
            "critical-path" => Ok(Self::CriticalPath),
            other => Err(format!(
                "unknown execution model `{other}` (expected sequential-edge or critical-path)"
            )),
        }
    }
}

/// Workflow-level `(accuracy, latency)` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub accuracy: f64,
    /// Seconds.
    pub latency: f64,
}

impl Estimate {
    pub fn new(accuracy: f64, latency: f64) -> Self {
        Self { accuracy, latency }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.accuracy) && self.latency >= 0.0 && self.latency.is_finite()
    }

    /// Weak dominance with at least one strict improvement.
    pub fn dominates(&self, other: &Estimate) -> bool {
        self.accuracy >= other.accuracy
            && self.latency <= other.latency
            && (self.accuracy > other.accuracy || self.latency < other.latency)
    }
}

/// Profile values of one leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafStats {
    pub accuracy: f64,
    pub latency: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProxyError {
    #[error("no profile for role `{role}` under {config}")]
    MissingProfile {
        role: RoleId,
        config: SubAgentConfig,
    },
    #[error("no configuration assigned to role `{0}`")]
    Unassigned(RoleId),
    #[error("role `{0}` is assigned but not active in this structure")]
    InactiveRole(RoleId),
    #[error("loop node encountered; unroll the graph first")]
    LoopNode,
    #[error("optional node encountered; resolve structural choices first")]
    OptionalNode,
    #[error("constraint violated by structural assignment")]
    ConstraintViolated,
    #[error("structural assignment does not name exactly the spec's choices")]
    IncompleteStructure,
    #[error("structural assignment leaves no active role")]
    EmptyStructure,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf(usize),
    Seq(Vec<Node>),
    Or(Vec<Node>),
    And(Vec<Node>),
    Cond(Box<Node>, Box<Node>),
}

/// Unrolled, choice-free graph with leaves addressed by slot.
///
/// Slot `i` holds the role `roles()[i]`; roles are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGraph {
    root: Node,
    roles: Vec<RoleId>,
}

impl CompiledGraph {
    pub fn new(graph: &WorkflowNode) -> Result<Self, ProxyError> {
        let mut roles: Vec<RoleId> = graph.leaves().into_iter().cloned().collect();
        roles.sort();
        roles.dedup();
        let root = lower(graph, &roles)?;
        Ok(Self { root, roles })
    }

    pub fn roles(&self) -> &[RoleId] {
        &self.roles
    }

    pub(crate) fn root(&self) -> &Node {
        &self.root
    }

    /// Looks up the profile of every slot.
    pub fn leaf_stats(
        &self,
        assignment: &RoleAssignment,
        table: &ProfileTable,
    ) -> Result<Vec<LeafStats>, ProxyError> {
        self.roles
            .iter()
            .map(|role| {
                let config = assignment
                    .get(role)
                    .ok_or_else(|| ProxyError::Unassigned(role.clone()))?;
                let p = table
                    .get(role, config)
                    .ok_or_else(|| ProxyError::MissingProfile {
                        role: role.clone(),
                        config: config.clone(),
                    })?;
                Ok(LeafStats {
                    accuracy: p.accuracy,
                    latency: p.latency,
                })
            })
            .collect()
    }

    pub fn evaluate(&self, leaves: &[LeafStats], exec: ExecutionModel) -> Estimate {
        let (accuracy, latency) = eval(&self.root, leaves, exec);
        Estimate { accuracy, latency }
    }

    pub fn accuracy(&self, leaves: &[LeafStats]) -> f64 {
        eval(&self.root, leaves, ExecutionModel::SequentialEdge).0
    }
}

fn lower(node: &WorkflowNode, roles: &[RoleId]) -> Result<Node, ProxyError> {
    let all = |children: &[WorkflowNode]| {
        children
            .iter()
            .map(|c| lower(c, roles))
            .collect::<Result<Vec<_>, _>>()
    };
    Ok(match node {
        WorkflowNode::Leaf { role } => Node::Leaf(
            roles
                .binary_search(role)
                .expect("role collected from graph"),
        ),
        WorkflowNode::Seq { children } => Node::Seq(all(children)?),
        WorkflowNode::Or { children } => Node::Or(all(children)?),
        WorkflowNode::And { children } => Node::And(all(children)?),
        WorkflowNode::Cond { primary, fallback } => Node::Cond(
            Box::new(lower(primary, roles)?),
            Box::new(lower(fallback, roles)?),
        ),
        WorkflowNode::Loop { .. } => return Err(ProxyError::LoopNode),
        WorkflowNode::Optional { .. } => return Err(ProxyError::OptionalNode),
    })
}

fn eval(node: &Node, leaves: &[LeafStats], exec: ExecutionModel) -> (f64, f64) {
    let parallel = |children: &[Node], conjunctive: bool| {
        let mut acc = 1.0;
        let mut lat: f64 = 0.0;
        for c in children {
            let (p, l) = eval(c, leaves, exec);
            acc *= if conjunctive { p } else { 1.0 - p };
            lat = match exec {
                ExecutionModel::SequentialEdge => lat + l,
                ExecutionModel::CriticalPath => lat.max(l),
            };
        }
        (if conjunctive { acc } else { 1.0 - acc }, lat)
    };
    match node {
        Node::Leaf(slot) => {
            let s = leaves[*slot];
            (s.accuracy, s.latency)
        }
        Node::Seq(children) => children.iter().fold((1.0, 0.0), |(acc, lat), c| {
            let (p, l) = eval(c, leaves, exec);
            (acc * p, lat + l)
        }),
        Node::And(children) => parallel(children, true),
        Node::Or(children) => parallel(children, false),
        Node::Cond(primary, fallback) => {
            let (p1, l1) = eval(primary, leaves, exec);
            let (p2, l2) = eval(fallback, leaves, exec);
            // Same value as p1 + (1 - p1) p2, but exactly monotone in floating point.
            (1.0 - (1.0 - p1) * (1.0 - p2), l1 + (1.0 - p1) * l2)
        }
    }
}

/// Extension point for alternative composition rules.
pub trait CompositionProxy: Sync {
    fn version(&self) -> &str;

    fn evaluate(
        &self,
        graph: &CompiledGraph,
        leaves: &[LeafStats],
        exec: ExecutionModel,
    ) -> Estimate;
}

/// The analytical rules described in the module docs.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyticProxy;

impl CompositionProxy for AnalyticProxy {
    fn version(&self) -> &str {
        ANALYTIC_PROXY_VERSION
    }

    fn evaluate(
        &self,
        graph: &CompiledGraph,
        leaves: &[LeafStats],
        exec: ExecutionModel,
    ) -> Estimate {
        graph.evaluate(leaves, exec)
    }
}

pub fn estimate_accuracy(
    graph: &WorkflowNode,
    assignment: &RoleAssignment,
    table: &ProfileTable,
) -> Result<f64, ProxyError> {
    let compiled = CompiledGraph::new(graph)?;
    Ok(compiled.accuracy(&compiled.leaf_stats(assignment, table)?))
}

pub fn estimate_latency(
    graph: &WorkflowNode,
    assignment: &RoleAssignment,
    table: &ProfileTable,
    exec: ExecutionModel,
) -> Result<f64, ProxyError> {
    let compiled = CompiledGraph::new(graph)?;
    Ok(compiled
        .evaluate(&compiled.leaf_stats(assignment, table)?, exec)
        .latency)
}

/// Estimates one full configuration: structural choices plus role assignment.
pub fn estimate(
    spec: &WorkflowSpec,
    structure: &StructuralAssignment,
    assignment: &RoleAssignment,
    table: &ProfileTable,
    exec: ExecutionModel,
) -> Result<Estimate, ProxyError> {
    if !structure.covers(spec) {
        return Err(ProxyError::IncompleteStructure);
    }
    if !structure.satisfies(spec) {
        return Err(ProxyError::ConstraintViolated);
    }
    let graph = residual_graph(spec, structure).ok_or(ProxyError::EmptyStructure)?;
    let compiled = CompiledGraph::new(&graph)?;
    if let Some(extra) = assignment
        .keys()
        .find(|r| compiled.roles.binary_search(r).is_err())
    {
        return Err(ProxyError::InactiveRole(extra.clone()));
    }
    Ok(compiled.evaluate(&compiled.leaf_stats(assignment, table)?, exec))
}
