//! Workflow graph IR.
//!
//! A workflow is a tree of composition nodes whose leaves are sub-agent
//! roles. `Optional` nodes attach a boolean structural choice to a subtree and
//! `Loop` nodes describe bounded generate/repair chains that are unrolled into
//! conditional stages before estimation.

mod format;
mod structure;
mod unroll;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::SubAgentConfig;

pub use format::parse_workflow_spec;
pub use structure::{
    enumerate_structures, residual_graph, ActivationConstraint, Predicate, StructuralAssignment,
    StructuralVariant, StructureEnumeration,
};
pub use unroll::unroll_loops;

/// Upper bound on the number of boolean structural choices in one spec.
pub const MAX_CHOICES: usize = 24;

/// Characters that are reserved by the canonical configuration id encoding.
pub(crate) const RESERVED_ID_CHARS: [char; 4] = ['|', ';', '=', '@'];

/// Identifier of one sub-agent role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleId(String);

impl RoleId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Role id of this role at the given unrolled retry depth, e.g. `fix#2`.
    pub fn at_depth(&self, depth: u32) -> Self {
        Self(format!("{}#{depth}", self.0))
    }
}

impl From<&str> for RoleId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for RoleId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl fmt::Display for RoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Identifier of one boolean structural choice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChoiceId(String);

impl ChoiceId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ChoiceId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl fmt::Display for ChoiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One node of the workflow composition tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkflowNode {
    Leaf {
        role: RoleId,
    },
    /// Logical sequence: every child must succeed.
    Seq {
        children: Vec<WorkflowNode>,
    },
    /// Disjunctive parallel branches: any child succeeding suffices.
    Or {
        children: Vec<WorkflowNode>,
    },
    /// Conjunctive parallel branches: every child must succeed.
    And {
        children: Vec<WorkflowNode>,
    },
    /// The fallback runs only when the primary fails.
    Cond {
        primary: Box<WorkflowNode>,
        fallback: Box<WorkflowNode>,
    },
    /// Bounded generate/repair loop; see [`unroll_loops`].
    Loop {
        body: Box<WorkflowNode>,
        repair_stages: Vec<WorkflowNode>,
        max_retries: u32,
    },
    /// Subtree present only when `choice` is on.
    Optional {
        choice: ChoiceId,
        child: Box<WorkflowNode>,
    },
}

impl WorkflowNode {
    pub fn leaf(role: impl Into<String>) -> Self {
        Self::Leaf {
            role: RoleId::new(role),
        }
    }

    pub fn seq(children: Vec<WorkflowNode>) -> Self {
        Self::Seq { children }
    }

    pub fn or(children: Vec<WorkflowNode>) -> Self {
        Self::Or { children }
    }

    pub fn and(children: Vec<WorkflowNode>) -> Self {
        Self::And { children }
    }

    pub fn cond(primary: WorkflowNode, fallback: WorkflowNode) -> Self {
        Self::Cond {
            primary: Box::new(primary),
            fallback: Box::new(fallback),
        }
    }

    pub fn repair_loop(
        body: WorkflowNode,
        repair_stages: Vec<WorkflowNode>,
        max_retries: u32,
    ) -> Self {
        Self::Loop {
            body: Box::new(body),
            repair_stages,
            max_retries,
        }
    }

    pub fn optional(choice: impl Into<String>, child: WorkflowNode) -> Self {
        Self::Optional {
            choice: ChoiceId::new(choice),
            child: Box::new(child),
        }
    }

    /// Leaf roles in depth-first order (duplicates preserved).
    pub fn leaves(&self) -> Vec<&RoleId> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a RoleId>) {
        match self {
            Self::Leaf { role } => out.push(role),
            Self::Seq { children } | Self::Or { children } | Self::And { children } => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
            Self::Cond { primary, fallback } => {
                primary.collect_leaves(out);
                fallback.collect_leaves(out);
            }
            Self::Loop {
                body,
                repair_stages,
                ..
            } => {
                body.collect_leaves(out);
                repair_stages.iter().for_each(|c| c.collect_leaves(out));
            }
            Self::Optional { child, .. } => child.collect_leaves(out),
        }
    }

    /// Choice ids referenced by `Optional` nodes.
    pub fn choices(&self) -> BTreeSet<&ChoiceId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |n| {
            if let Self::Optional { choice, .. } = n {
                out.insert(choice);
            }
        });
        out
    }

    pub fn contains_loop(&self) -> bool {
        let mut found = false;
        self.visit(&mut |n| found |= matches!(n, Self::Loop { .. }));
        found
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a WorkflowNode)) {
        f(self);
        match self {
            Self::Leaf { .. } => {}
            Self::Seq { children } | Self::Or { children } | Self::And { children } => {
                children.iter().for_each(|c| c.visit(f))
            }
            Self::Cond { primary, fallback } => {
                primary.visit(f);
                fallback.visit(f);
            }
            Self::Loop {
                body,
                repair_stages,
                ..
            } => {
                body.visit(f);
                repair_stages.iter().for_each(|c| c.visit(f));
            }
            Self::Optional { child, .. } => child.visit(f),
        }
    }
}

/// Candidate configurations declared for one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigSpace {
    /// Cross product of models and reasoning budgets.
    Grid {
        models: Vec<String>,
        budgets: Vec<u32>,
    },
    /// Explicit list.
    List { configs: Vec<SubAgentConfig> },
}

impl ConfigSpace {
    /// Configurations in canonical (model, budget) order.
    pub fn configs(&self) -> Vec<SubAgentConfig> {
        let mut out: Vec<SubAgentConfig> = match self {
            Self::Grid { models, budgets } => models
                .iter()
                .flat_map(|m| {
                    budgets
                        .iter()
                        .map(move |&b| SubAgentConfig::new(m.clone(), b))
                })
                .collect(),
            Self::List { configs } => configs.clone(),
        };
        out.sort();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub id: RoleId,
    pub config_space: ConfigSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceSpec {
    pub id: ChoiceId,
    #[serde(default)]
    pub default: bool,
}

/// A validated workflow: graph, structural choices, constraints, and per-role
/// configuration spaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkflowSpec {
    pub name: String,
    pub roles: Vec<RoleSpec>,
    pub choices: Vec<ChoiceSpec>,
    pub constraints: Vec<ActivationConstraint>,
    pub graph: WorkflowNode,
}

impl WorkflowSpec {
    /// Builds and validates a spec.
    pub fn new(
        name: impl Into<String>,
        roles: Vec<RoleSpec>,
        choices: Vec<ChoiceSpec>,
        constraints: Vec<ActivationConstraint>,
        graph: WorkflowNode,
    ) -> Result<Self, WorkflowError> {
        let spec = Self {
            name: name.into(),
            roles,
            choices,
            constraints,
            graph,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(document: &str) -> Result<Self, WorkflowError> {
        parse_workflow_spec(document)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serialization is infallible");
        s.push('\n');
        s
    }

    pub fn role(&self, id: &RoleId) -> Option<&RoleSpec> {
        self.roles.iter().find(|r| &r.id == id)
    }

    /// Choice ids in canonical (lexicographic) order.
    pub fn choice_ids(&self) -> Vec<ChoiceId> {
        let mut ids: Vec<ChoiceId> = self.choices.iter().map(|c| c.id.clone()).collect();
        ids.sort();
        ids
    }

    /// The structural assignment given by each choice's declared default.
    pub fn default_structure(&self) -> StructuralAssignment {
        StructuralAssignment::from_map(
            self.choices
                .iter()
                .map(|c| (c.id.clone(), c.default))
                .collect(),
        )
    }

    /// Per-role declared configuration spaces.
    pub fn config_spaces(&self) -> BTreeMap<RoleId, Vec<SubAgentConfig>> {
        self.roles
            .iter()
            .map(|r| (r.id.clone(), r.config_space.configs()))
            .collect()
    }

    fn validate(&self) -> Result<(), WorkflowError> {
        let mut role_ids = BTreeSet::new();
        for role in &self.roles {
            check_id(role.id.as_str())?;
            if !role_ids.insert(&role.id) {
                return Err(WorkflowError::DuplicateRole(role.id.clone()));
            }
            let configs = role.config_space.configs();
            if configs.is_empty() {
                return Err(WorkflowError::EmptyConfigSpace(role.id.clone()));
            }
            for pair in configs.windows(2) {
                if pair[0] == pair[1] {
                    return Err(WorkflowError::DuplicateConfig {
                        role: role.id.clone(),
                        config: pair[0].clone(),
                    });
                }
            }
            for c in &configs {
                check_id(&c.model)?;
                if c.budget == 0 {
                    return Err(WorkflowError::InvalidBudget {
                        role: role.id.clone(),
                        config: c.clone(),
                    });
                }
            }
        }

        let mut choice_ids = BTreeSet::new();
        for choice in &self.choices {
            if choice.id.as_str().is_empty() {
                return Err(WorkflowError::InvalidId(String::new()));
            }
            if !choice_ids.insert(&choice.id) {
                return Err(WorkflowError::DuplicateChoice(choice.id.clone()));
            }
        }
        if self.choices.len() > MAX_CHOICES {
            return Err(WorkflowError::TooManyChoices(self.choices.len()));
        }

        for choice in self.graph.choices() {
            if !choice_ids.contains(choice) {
                return Err(WorkflowError::UnknownChoice(choice.clone()));
            }
        }
        for constraint in &self.constraints {
            for choice in constraint.referenced_choices() {
                if !choice_ids.contains(choice) {
                    return Err(WorkflowError::UnknownChoice(choice.clone()));
                }
            }
        }

        check_composites(&self.graph)?;
        let unrolled = unroll_loops(&self.graph)?;
        let mut seen = BTreeSet::new();
        for role in unrolled.leaves() {
            if !role_ids.contains(role) {
                return Err(WorkflowError::UnknownRole(role.clone()));
            }
            if !seen.insert(role) {
                return Err(WorkflowError::DuplicateLeaf(role.clone()));
            }
        }
        Ok(())
    }
}

fn check_composites(node: &WorkflowNode) -> Result<(), WorkflowError> {
    let mut result = Ok(());
    node.visit(&mut |n| {
        let empty = match n {
            WorkflowNode::Seq { children } if children.is_empty() => Some("seq"),
            WorkflowNode::Or { children } if children.is_empty() => Some("or"),
            WorkflowNode::And { children } if children.is_empty() => Some("and"),
            _ => None,
        };
        if let (Some(kind), Ok(())) = (empty, &result) {
            result = Err(WorkflowError::EmptyComposite(kind));
        }
    });
    result
}

fn check_id(id: &str) -> Result<(), WorkflowError> {
    if id.is_empty() || id.contains(RESERVED_ID_CHARS) || id.chars().any(char::is_whitespace) {
        return Err(WorkflowError::InvalidId(id.to_owned()));
    }
    Ok(())
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkflowError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown role `{0}`")]
    UnknownRole(RoleId),
    #[error("unknown choice `{0}`")]
    UnknownChoice(ChoiceId),
    #[error("duplicate role `{0}`")]
    DuplicateRole(RoleId),
    #[error("duplicate choice `{0}`")]
    DuplicateChoice(ChoiceId),
    #[error("role `{0}` appears more than once in the unrolled graph")]
    DuplicateLeaf(RoleId),
    #[error("duplicate configuration {config} in the space of role `{role}`")]
    DuplicateConfig {
        role: RoleId,
        config: SubAgentConfig,
    },
    #[error("configuration {config} of role `{role}` has a zero reasoning budget")]
    InvalidBudget {
        role: RoleId,
        config: SubAgentConfig,
    },
    #[error("role `{0}` declares an empty configuration space")]
    EmptyConfigSpace(RoleId),
    #[error("invalid identifier `{0}` (empty, whitespace, or one of | ; = @)")]
    InvalidId(String),
    #[error("loop has negative max_retries ({0})")]
    NegativeRetries(i64),
    #[error("loop max_retries {max_retries} exceeds the {stages} declared repair stages")]
    RetriesExceedStages { max_retries: u32, stages: usize },
    #[error("`{0}` node must have at least one child")]
    EmptyComposite(&'static str),
    #[error("{0} structural choices exceed the supported maximum of {MAX_CHOICES}")]
    TooManyChoices(usize),
    #[error("constraint `{kind}` has k = {k}, which must be nonnegative")]
    NegativeK { kind: &'static str, k: i64 },
}
