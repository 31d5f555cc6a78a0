//! Bounded-loop unrolling.

use super::{WorkflowError, WorkflowNode};

/// Rewrites every `Loop` into a chain of conditional repair stages.
///
/// `Loop(body, [s1, s2, ..], k)` becomes `Cond(..Cond(Cond(body, s1#1), s2#2).., sk#k)`:
/// stage `i` runs only when the body and every earlier stage failed. Leaves
/// of stage `i` are renamed `role#i`. Stages beyond `k` are dropped, and
/// `k = 0` leaves just the body. Graphs without loops come back unchanged.
pub fn unroll_loops(graph: &WorkflowNode) -> Result<WorkflowNode, WorkflowError> {
    Ok(match graph {
        WorkflowNode::Leaf { .. } => graph.clone(),
        WorkflowNode::Seq { children } => WorkflowNode::Seq {
            children: unroll_all(children)?,
        },
        WorkflowNode::Or { children } => WorkflowNode::Or {
            children: unroll_all(children)?,
        },
        WorkflowNode::And { children } => WorkflowNode::And {
            children: unroll_all(children)?,
        },
        WorkflowNode::Cond { primary, fallback } => {
            WorkflowNode::cond(unroll_loops(primary)?, unroll_loops(fallback)?)
        }
        WorkflowNode::Optional { choice, child } => WorkflowNode::Optional {
            choice: choice.clone(),
            child: Box::new(unroll_loops(child)?),
        },
        WorkflowNode::Loop {
            body,
            repair_stages,
            max_retries,
        } => {
            let retries = *max_retries as usize;
            if retries > repair_stages.len() {
                return Err(WorkflowError::RetriesExceedStages {
                    max_retries: *max_retries,
                    stages: repair_stages.len(),
                });
            }
            let mut chain = unroll_loops(body)?;
            for (i, stage) in repair_stages.iter().take(retries).enumerate() {
                let stage = suffix_leaves(unroll_loops(stage)?, i as u32 + 1);
                chain = WorkflowNode::cond(chain, stage);
            }
            chain
        }
    })
}

fn unroll_all(children: &[WorkflowNode]) -> Result<Vec<WorkflowNode>, WorkflowError> {
    children.iter().map(unroll_loops).collect()
}

fn suffix_leaves(node: WorkflowNode, depth: u32) -> WorkflowNode {
    let suffix_all = |children: Vec<WorkflowNode>| -> Vec<WorkflowNode> {
        children
            .into_iter()
            .map(|c| suffix_leaves(c, depth))
            .collect()
    };
    match node {
        WorkflowNode::Leaf { role } => WorkflowNode::Leaf {
            role: role.at_depth(depth),
        },
        WorkflowNode::Seq { children } => WorkflowNode::Seq {
            children: suffix_all(children),
        },
        WorkflowNode::Or { children } => WorkflowNode::Or {
            children: suffix_all(children),
        },
        WorkflowNode::And { children } => WorkflowNode::And {
            children: suffix_all(children),
        },
        WorkflowNode::Cond { primary, fallback } => WorkflowNode::cond(
            suffix_leaves(*primary, depth),
            suffix_leaves(*fallback, depth),
        ),
        WorkflowNode::Optional { choice, child } => WorkflowNode::Optional {
            choice,
            child: Box::new(suffix_leaves(*child, depth)),
        },
        // Inner loops are unrolled before suffixing.
        WorkflowNode::Loop { .. } => unreachable!("suffix_leaves called on a graph with loops"),
    }
}
