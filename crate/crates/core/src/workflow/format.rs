//! JSON workflow-spec documents.

use serde::Deserialize;

use super::{
    ActivationConstraint, ChoiceId, ChoiceSpec, Predicate, RoleId, RoleSpec, WorkflowError,
    WorkflowNode, WorkflowSpec,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    roles: Vec<RoleSpec>,
    #[serde(default)]
    choices: Vec<ChoiceSpec>,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
    graph: RawNode,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawNode {
    Leaf {
        role: RoleId,
    },
    Seq {
        children: Vec<RawNode>,
    },
    Or {
        children: Vec<RawNode>,
    },
    And {
        children: Vec<RawNode>,
    },
    Cond {
        primary: Box<RawNode>,
        fallback: Box<RawNode>,
    },
    Loop {
        body: Box<RawNode>,
        repair_stages: Vec<RawNode>,
        max_retries: i64,
    },
    Optional {
        choice: ChoiceId,
        child: Box<RawNode>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawConstraint {
    AtLeastK {
        choices: Vec<ChoiceId>,
        k: i64,
    },
    ImpliedBy {
        target: ChoiceId,
        condition: Predicate,
    },
    RequiresCountGe {
        target: ChoiceId,
        choices: Vec<ChoiceId>,
        k: i64,
    },
}

/// Parses and validates a workflow-spec JSON document.
pub fn parse_workflow_spec(document: &str) -> Result<WorkflowSpec, WorkflowError> {
    let raw: RawSpec = serde_json::from_str(document).map_err(|e| WorkflowError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let graph = convert_node(raw.graph)?;
    let constraints = raw
        .constraints
        .into_iter()
        .map(convert_constraint)
        .collect::<Result<Vec<_>, _>>()?;
    WorkflowSpec::new(raw.name, raw.roles, raw.choices, constraints, graph)
}

fn convert_children(
    kind: &'static str,
    children: Vec<RawNode>,
) -> Result<Vec<WorkflowNode>, WorkflowError> {
    if children.is_empty() {
        return Err(WorkflowError::EmptyComposite(kind));
    }
    children.into_iter().map(convert_node).collect()
}

fn convert_node(raw: RawNode) -> Result<WorkflowNode, WorkflowError> {
    Ok(match raw {
        RawNode::Leaf { role } => WorkflowNode::Leaf { role },
        RawNode::Seq { children } => WorkflowNode::Seq {
            children: convert_children("seq", children)?,
        },
        RawNode::Or { children } => WorkflowNode::Or {
            children: convert_children("or", children)?,
        },
        RawNode::And { children } => WorkflowNode::And {
            children: convert_children("and", children)?,
        },
        RawNode::Cond { primary, fallback } => {
            WorkflowNode::cond(convert_node(*primary)?, convert_node(*fallback)?)
        }
        RawNode::Loop {
            body,
            repair_stages,
            max_retries,
        } => {
            let max_retries = u32::try_from(max_retries)
                .map_err(|_| WorkflowError::NegativeRetries(max_retries))?;
            WorkflowNode::Loop {
                body: Box::new(convert_node(*body)?),
                repair_stages: repair_stages
                    .into_iter()
                    .map(convert_node)
                    .collect::<Result<_, _>>()?,
                max_retries,
            }
        }
        RawNode::Optional { choice, child } => WorkflowNode::Optional {
            choice,
            child: Box::new(convert_node(*child)?),
        },
    })
}

fn nonneg_k(kind: &'static str, k: i64) -> Result<usize, WorkflowError> {
    usize::try_from(k).map_err(|_| WorkflowError::NegativeK { kind, k })
}

fn convert_constraint(raw: RawConstraint) -> Result<ActivationConstraint, WorkflowError> {
    Ok(match raw {
        RawConstraint::AtLeastK { choices, k } => ActivationConstraint::AtLeastK {
            choices,
            k: nonneg_k("at_least_k", k)?,
        },
        RawConstraint::ImpliedBy { target, condition } => {
            ActivationConstraint::ImpliedBy { target, condition }
        }
        RawConstraint::RequiresCountGe { target, choices, k } => {
            ActivationConstraint::RequiresCountGe {
                target,
                choices,
                k: nonneg_k("requires_count_ge", k)?,
            }
        }
    })
}
