//! Structural choices, activation constraints, and structural enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{unroll_loops, ChoiceId, RoleId, WorkflowNode, WorkflowSpec};

/// Boolean predicate over structural choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Choice(ChoiceId),
    Not(Box<Predicate>),
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
}

impl Predicate {
    pub fn eval(&self, assignment: &StructuralAssignment) -> bool {
        match self {
            Self::Choice(c) => assignment.is_on(c),
            Self::Not(p) => !p.eval(assignment),
            Self::All(ps) => ps.iter().all(|p| p.eval(assignment)),
            Self::Any(ps) => ps.iter().any(|p| p.eval(assignment)),
        }
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a ChoiceId>) {
        match self {
            Self::Choice(c) => out.push(c),
            Self::Not(p) => p.collect(out),
            Self::All(ps) | Self::Any(ps) => ps.iter().for_each(|p| p.collect(out)),
        }
    }
}

/// Restriction on which combinations of structural choices are legal.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationConstraint {
    /// At least `k` of `choices` are on.
    AtLeastK { choices: Vec<ChoiceId>, k: usize },
    /// `condition` being true forces `target` on.
    ImpliedBy {
        target: ChoiceId,
        condition: Predicate,
    },
    /// `target` is on exactly when at least `k` of `choices` are on.
    RequiresCountGe {
        target: ChoiceId,
        choices: Vec<ChoiceId>,
        k: usize,
    },
}

impl ActivationConstraint {
    pub fn is_satisfied(&self, assignment: &StructuralAssignment) -> bool {
        match self {
            Self::AtLeastK { choices, k } => assignment.count_on(choices) >= *k,
            Self::ImpliedBy { target, condition } => {
                !condition.eval(assignment) || assignment.is_on(target)
            }
            Self::RequiresCountGe { target, choices, k } => {
                assignment.is_on(target) == (assignment.count_on(choices) >= *k)
            }
        }
    }

    pub fn referenced_choices(&self) -> Vec<&ChoiceId> {
        match self {
            Self::AtLeastK { choices, .. } => choices.iter().collect(),
            Self::ImpliedBy { target, condition } => {
                let mut out = vec![target];
                condition.collect(&mut out);
                out
            }
            Self::RequiresCountGe {
                target, choices, ..
            } => std::iter::once(target).chain(choices).collect(),
        }
    }
}

/// One on/off value per structural choice.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StructuralAssignment(BTreeMap<ChoiceId, bool>);

impl StructuralAssignment {
    pub fn from_map(values: BTreeMap<ChoiceId, bool>) -> Self {
        Self(values)
    }

    /// Missing choices read as off.
    pub fn is_on(&self, choice: &ChoiceId) -> bool {
        self.0.get(choice).copied().unwrap_or(false)
    }

    pub fn count_on(&self, choices: &[ChoiceId]) -> usize {
        choices.iter().filter(|c| self.is_on(c)).count()
    }

    pub fn values(&self) -> &BTreeMap<ChoiceId, bool> {
        &self.0
    }

    /// `0`/`1` per choice in canonical order.
    pub fn bits(&self) -> String {
        self.0
            .values()
            .map(|&on| if on { '1' } else { '0' })
            .collect()
    }

    pub fn satisfies(&self, spec: &WorkflowSpec) -> bool {
        spec.constraints.iter().all(|c| c.is_satisfied(self))
    }

    /// True when the assignment names exactly the spec's choices.
    pub fn covers(&self, spec: &WorkflowSpec) -> bool {
        self.0.len() == spec.choices.len()
            && spec.choices.iter().all(|c| self.0.contains_key(&c.id))
    }
}

/// A constraint-satisfying structural assignment together with the graph
/// that remains once inactive optional subtrees are removed.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralVariant {
    pub assignment: StructuralAssignment,
    /// Sorted role ids of the residual graph.
    pub active_roles: Vec<RoleId>,
    /// Unrolled residual graph; `None` when every subtree was switched off.
    pub graph: Option<WorkflowNode>,
}

impl StructuralVariant {
    pub fn new(spec: &WorkflowSpec, assignment: StructuralAssignment) -> Self {
        let graph = residual_graph(spec, &assignment);
        let mut active_roles: Vec<RoleId> = graph
            .as_ref()
            .map(|g| g.leaves().into_iter().cloned().collect())
            .unwrap_or_default();
        active_roles.sort();
        Self {
            assignment,
            active_roles,
            graph,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureEnumeration {
    pub variants: Vec<StructuralVariant>,
    /// Set when no assignment satisfies the constraints.
    pub unsatisfiable: bool,
}

/// Enumerates every constraint-satisfying structural assignment.
///
/// Assignments are produced in lexicographic order over the choice ids, with
/// `false < true` and the smallest id most significant.
pub fn enumerate_structures(spec: &WorkflowSpec) -> StructureEnumeration {
    let ids = spec.choice_ids();
    let n = ids.len();
    let mut variants = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let values = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), mask >> (n - 1 - i) & 1 == 1))
            .collect();
        let assignment = StructuralAssignment(values);
        if assignment.satisfies(spec) {
            variants.push(StructuralVariant::new(spec, assignment));
        }
    }
    StructureEnumeration {
        unsatisfiable: variants.is_empty(),
        variants,
    }
}

/// Unrolls loops and removes optional subtrees whose choice is off.
///
/// Composite nodes left without children disappear; a `Cond` that loses one
/// side collapses to the other.
pub fn residual_graph(
    spec: &WorkflowSpec,
    assignment: &StructuralAssignment,
) -> Option<WorkflowNode> {
    let unrolled = unroll_loops(&spec.graph).expect("validated spec unrolls");
    prune(&unrolled, assignment)
}

pub(crate) fn prune(
    node: &WorkflowNode,
    assignment: &StructuralAssignment,
) -> Option<WorkflowNode> {
    let prune_all = |children: &[WorkflowNode]| -> Option<Vec<WorkflowNode>> {
        let kept: Vec<_> = children
            .iter()
            .filter_map(|c| prune(c, assignment))
            .collect();
        (!kept.is_empty()).then_some(kept)
    };
    match node {
        WorkflowNode::Leaf { .. } => Some(node.clone()),
        WorkflowNode::Seq { children } => {
            prune_all(children).map(|children| WorkflowNode::Seq { children })
        }
        WorkflowNode::Or { children } => {
            prune_all(children).map(|children| WorkflowNode::Or { children })
        }
        WorkflowNode::And { children } => {
            prune_all(children).map(|children| WorkflowNode::And { children })
        }
        WorkflowNode::Cond { primary, fallback } => {
            match (prune(primary, assignment), prune(fallback, assignment)) {
                (Some(p), Some(f)) => Some(WorkflowNode::cond(p, f)),
                (Some(only), None) | (None, Some(only)) => Some(only),
                (None, None) => None,
            }
        }
        WorkflowNode::Optional { choice, child } => {
            if assignment.is_on(choice) {
                prune(child, assignment)
            } else {
                None
            }
        }
        WorkflowNode::Loop { .. } => {
            let unrolled = unroll_loops(node).ok()?;
            prune(&unrolled, assignment)
        }
    }
}
