//! Seeded random instances for property and acceptance tests.

use rand::Rng;

use crate::explorer::FrontierPoint;
use crate::profile::{Profile, ProfileTable, SubAgentConfig};
use crate::proxy::LeafStats;
use crate::workflow::{
    ActivationConstraint, ChoiceId, ChoiceSpec, ConfigSpace, Predicate, RoleSpec, WorkflowNode,
    WorkflowSpec,
};

/// Accuracy or latency drawn from a coarse grid half of the time, so exact ties occur.
fn value<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if rng.random_bool(0.5) {
        lo + (hi - lo) * rng.random_range(0..=10) as f64 / 10.0
    } else {
        rng.random_range(lo..=hi)
    }
}

/// `n` points with accuracy in `[0, 1]` and latency in `[0, 100]`.
pub fn random_points<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<FrontierPoint> {
    (0..n)
        .map(|i| FrontierPoint {
            accuracy: value(rng, 0.0, 1.0),
            latency: value(rng, 0.0, 100.0),
            id: format!("p{i:04}"),
        })
        .collect()
}

pub fn random_leaf_stats<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<LeafStats> {
    (0..n)
        .map(|_| LeafStats {
            accuracy: value(rng, 0.0, 1.0),
            latency: value(rng, 0.0, 20.0),
        })
        .collect()
}

/// Random Seq/Or/And/Cond tree whose leaves are the given roles, each used once.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, leaves: Vec<WorkflowNode>) -> WorkflowNode {
    if leaves.len() == 1 {
        return leaves.into_iter().next().expect("one leaf");
    }
    let kind = rng.random_range(0..4);
    if kind == 3 {
        let split = rng.random_range(1..leaves.len());
        let mut left = leaves;
        let right = left.split_off(split);
        return WorkflowNode::cond(random_tree(rng, left), random_tree(rng, right));
    }
    let parts = rng.random_range(2..=leaves.len());
    let mut groups: Vec<Vec<WorkflowNode>> = (0..parts).map(|_| Vec::new()).collect();
    for (i, leaf) in leaves.into_iter().enumerate() {
        let g = if i < parts {
            i
        } else {
            rng.random_range(0..parts)
        };
        groups[g].push(leaf);
    }
    let children = groups.into_iter().map(|g| random_tree(rng, g)).collect();
    match kind {
        0 => WorkflowNode::seq(children),
        1 => WorkflowNode::or(children),
        _ => WorkflowNode::and(children),
    }
}

/// Random choice-free graph over roles `r0..r{n-1}`.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n_leaves: usize) -> WorkflowNode {
    let leaves = (0..n_leaves)
        .map(|i| WorkflowNode::leaf(format!("r{i}")))
        .collect();
    random_tree(rng, leaves)
}

/// A small workflow with a complete profile table: at most 4 roles, 8 options
/// per role, and 4 structural variants.
pub fn random_desk_instance<R: Rng + ?Sized>(rng: &mut R) -> (WorkflowSpec, ProfileTable) {
    let n_roles = rng.random_range(1..=4);
    let n_choices = rng.random_range(0..=2.min(n_roles - 1));
    let role_ids: Vec<String> = (0..n_roles).map(|i| format!("r{i}")).collect();
    let choice_ids: Vec<String> = (0..n_choices).map(|i| format!("c{i}")).collect();

    // Role 0 is always present; roles 1..=n_choices sit behind one choice each.
    let leaves = role_ids
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let leaf = WorkflowNode::leaf(r.clone());
            if i >= 1 && i <= n_choices {
                WorkflowNode::optional(choice_ids[i - 1].clone(), leaf)
            } else {
                leaf
            }
        })
        .collect();
    let graph = random_tree(rng, leaves);

    let mut constraints = Vec::new();
    if n_choices == 2 && rng.random_bool(0.3) {
        constraints.push(ActivationConstraint::ImpliedBy {
            target: ChoiceId::new("c0"),
            condition: Predicate::Choice(ChoiceId::new("c1")),
        });
    }

    let mut table = ProfileTable::default();
    let roles = role_ids
        .iter()
        .map(|r| {
            let n_options = rng.random_range(1..=8);
            let configs: Vec<SubAgentConfig> = (0..n_options)
                .map(|j| SubAgentConfig::new(format!("m{j}"), 1 + j as u32))
                .collect();
            for c in &configs {
                table
                    .insert(Profile::new(
                        r.clone(),
                        c.clone(),
                        value(rng, 0.0, 1.0),
                        value(rng, 0.0, 20.0),
                    ))
                    .expect("fresh profile");
            }
            RoleSpec {
                id: r.clone().into(),
                config_space: ConfigSpace::List { configs },
            }
        })
        .collect();
    let choices = choice_ids
        .iter()
        .map(|c| ChoiceSpec {
            id: ChoiceId::new(c.clone()),
            default: true,
        })
        .collect();
    let spec = WorkflowSpec::new("desk", roles, choices, constraints, graph)
        .expect("generated spec is valid");
    (spec, table)
}
