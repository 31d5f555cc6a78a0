//! Seeded Monte-Carlo execution of workflow configurations.
//!
//! Every random draw is a pure function of `(seed, configuration id, query
//! index, leaf role, purpose)`, so measurements do not depend on evaluation
//! order or on how work is split across threads.

mod rng;
mod scenario;
mod validate;

use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::{ExplorerError, WorkflowConfiguration};
use crate::metrics::MetricsError;
use crate::profile::SubAgentConfig;
use crate::proxy::{CompiledGraph, ExecutionModel, Node, ProxyError, RoleAssignment};
use crate::workflow::{residual_graph, RoleId, WorkflowNode, WorkflowSpec};

pub use rng::CounterRng;
use rng::{fnv1a, mix, unit_f64};
pub use scenario::{LatencyModel, LeafTruth, TruthScenario, SCENARIO_FORMAT_VERSION};
pub use validate::{
    brute_force_frontier, measure_many, order_validation, BruteForceOptions, BruteForceResult,
    BruteForceRow, FrontierConsistency, OrderMetrics, OrderReport, OrderRow, DEFAULT_SPACE_CAP,
};

#[derive(Debug, Error, PartialEq)]
pub enum SimulatorError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario has no entry for role `{role}` under {config}")]
    MissingEntry {
        role: RoleId,
        config: SubAgentConfig,
    },
    #[error("n_samples must be at least 1")]
    ZeroSamples,
    #[error("restricted space has {size} configurations, above the cap of {cap}")]
    SpaceTooLarge { size: String, cap: u64 },
    #[error("could not start worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Explorer(#[from] ExplorerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Aggregated outcome of repeated simulation of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPoint {
    pub id: String,
    pub accuracy: f64,
    #[serde(rename = "latency_s")]
    pub latency: f64,
    pub n_samples: u64,
    /// Binomial standard error; `None` for a single sample.
    pub accuracy_se: Option<f64>,
    /// Standard error of the mean latency; `None` for a single sample.
    #[serde(rename = "latency_se_s")]
    pub latency_se: Option<f64>,
}

const PURPOSE_GATE: u64 = 1;
const PURPOSE_SHARED: u64 = 2;
const PURPOSE_SUCCESS: u64 = 3;
const PURPOSE_LATENCY: u64 = 4;

#[derive(Debug, Clone)]
struct PreparedLeaf {
    success_prob: f64,
    latency: f64,
    role_hash: u64,
    spread: Option<LogNormal<f64>>,
}

/// One configuration bound to a scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct PreparedConfig {
    id: String,
    stream: u64,
    graph: CompiledGraph,
    leaves: Vec<PreparedLeaf>,
    correlation: f64,
    exec: ExecutionModel,
}

impl PreparedConfig {
    /// Prepares a configuration of `spec`.
    pub fn new(
        spec: &WorkflowSpec,
        config: &WorkflowConfiguration,
        scenario: &TruthScenario,
        exec: ExecutionModel,
    ) -> Result<Self, SimulatorError> {
        let graph = residual_graph(spec, &config.structural).ok_or(ProxyError::EmptyStructure)?;
        Self::from_graph(&graph, &config.assignment, scenario, &config.id, exec)
    }

    /// Prepares an unrolled, choice-free graph under an explicit id.
    pub fn from_graph(
        graph: &WorkflowNode,
        assignment: &RoleAssignment,
        scenario: &TruthScenario,
        id: &str,
        exec: ExecutionModel,
    ) -> Result<Self, SimulatorError> {
        let graph = CompiledGraph::new(graph)?;
        let leaves = graph
            .roles()
            .iter()
            .map(|role| {
                let config = assignment
                    .get(role)
                    .ok_or_else(|| ProxyError::Unassigned(role.clone()))?;
                let truth =
                    scenario
                        .get(role, config)
                        .ok_or_else(|| SimulatorError::MissingEntry {
                            role: role.clone(),
                            config: config.clone(),
                        })?;
                let spread = match scenario.latency_model {
                    LatencyModel::LogNormal if scenario.cv > 0.0 && truth.latency > 0.0 => {
                        let sigma = (1.0 + scenario.cv * scenario.cv).ln().sqrt();
                        Some(
                            LogNormal::new(truth.latency.ln(), sigma)
                                .expect("finite lognormal parameters"),
                        )
                    }
                    _ => None,
                };
                Ok(PreparedLeaf {
                    success_prob: truth.success_prob,
                    latency: truth.latency,
                    role_hash: fnv1a(role.as_str()),
                    spread,
                })
            })
            .collect::<Result<Vec<_>, SimulatorError>>()?;
        Ok(Self {
            id: id.to_owned(),
            stream: mix(scenario.seed, fnv1a(id)),
            graph,
            leaves,
            correlation: scenario.correlation,
            exec,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    fn draw(&self, query: u64, purpose: u64, role_hash: u64) -> u64 {
        mix(mix(mix(self.stream, query), purpose), role_hash)
    }

    /// Success flag and latency of one query.
    pub fn simulate_once(&self, query: u64) -> (bool, f64) {
        let shared = (unit_f64(self.draw(query, PURPOSE_GATE, 0)) < self.correlation)
            .then(|| unit_f64(self.draw(query, PURPOSE_SHARED, 0)));
        self.run(self.graph.root(), query, shared)
    }

    fn run(&self, node: &Node, query: u64, shared: Option<f64>) -> (bool, f64) {
        let parallel = |children: &[Node], all: bool| {
            let mut ok = all;
            let mut lat: f64 = 0.0;
            for c in children {
                let (s, l) = self.run(c, query, shared);
                ok = if all { ok && s } else { ok || s };
                lat = match self.exec {
                    ExecutionModel::SequentialEdge => lat + l,
                    ExecutionModel::CriticalPath => lat.max(l),
                };
            }
            (ok, lat)
        };
        match node {
            Node::Leaf(slot) => {
                let leaf = &self.leaves[*slot];
                let u = shared
                    .unwrap_or_else(|| unit_f64(self.draw(query, PURPOSE_SUCCESS, leaf.role_hash)));
                let latency = match &leaf.spread {
                    Some(dist) => dist.sample(&mut CounterRng::new(self.draw(
                        query,
                        PURPOSE_LATENCY,
                        leaf.role_hash,
                    ))),
                    None => leaf.latency,
                };
                (u < leaf.success_prob, latency)
            }
            Node::Seq(children) => children.iter().fold((true, 0.0), |(ok, lat), c| {
                let (s, l) = self.run(c, query, shared);
                (ok && s, lat + l)
            }),
            Node::And(children) => parallel(children, true),
            Node::Or(children) => parallel(children, false),
            Node::Cond(primary, fallback) => {
                let (s1, l1) = self.run(primary, query, shared);
                if s1 {
                    (true, l1)
                } else {
                    let (s2, l2) = self.run(fallback, query, shared);
                    (s2, l1 + l2)
                }
            }
        }
    }

    /// Aggregates queries `0..n_samples`.
    pub fn measure(&self, n_samples: u64) -> Result<MeasuredPoint, SimulatorError> {
        if n_samples == 0 {
            return Err(SimulatorError::ZeroSamples);
        }
        let mut successes = 0u64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for q in 0..n_samples {
            let (ok, lat) = self.simulate_once(q);
            successes += ok as u64;
            let delta = lat - mean;
            mean += delta / (q + 1) as f64;
            m2 += delta * (lat - mean);
        }
        let n = n_samples as f64;
        let accuracy = successes as f64 / n;
        let (accuracy_se, latency_se) = if n_samples > 1 {
            (
                Some((accuracy * (1.0 - accuracy) / n).sqrt()),
                Some((m2 / (n - 1.0)).sqrt() / n.sqrt()),
            )
        } else {
            (None, None)
        };
        Ok(MeasuredPoint {
            id: self.id.clone(),
            accuracy,
            latency: mean,
            n_samples,
            accuracy_se,
            latency_se,
        })
    }
}

/// Simulates one query of an unrolled graph.
pub fn simulate_once(
    graph: &WorkflowNode,
    assignment: &RoleAssignment,
    scenario: &TruthScenario,
    config_id: &str,
    query: u64,
    exec: ExecutionModel,
) -> Result<(bool, f64), SimulatorError> {
    Ok(
        PreparedConfig::from_graph(graph, assignment, scenario, config_id, exec)?
            .simulate_once(query),
    )
}

/// Measures one configuration of `spec` over `n_samples` queries.
pub fn measure(
    spec: &WorkflowSpec,
    config: &WorkflowConfiguration,
    scenario: &TruthScenario,
    n_samples: u64,
    exec: ExecutionModel,
) -> Result<MeasuredPoint, SimulatorError> {
    PreparedConfig::new(spec, config, scenario, exec)?.measure(n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Profile, ProfileTable};
    use crate::proxy::{estimate_accuracy, estimate_latency};
    use WorkflowNode as N;

    fn scenario(
        leaves: &[(&str, f64, f64)],
        correlation: f64,
    ) -> (TruthScenario, RoleAssignment, ProfileTable) {
        let config = SubAgentConfig::new("m", 1);
        let table = ProfileTable::from_profiles(
            "t",
            leaves
                .iter()
                .map(|&(r, p, l)| Profile::new(r, config.clone(), p, l)),
        )
        .unwrap();
        let s = TruthScenario::matching(&table, LatencyModel::Deterministic, 0.0, correlation, 42)
            .unwrap();
        let a = leaves
            .iter()
            .map(|&(r, _, _)| (RoleId::from(r), config.clone()))
            .collect();
        (s, a, table)
    }

    #[test]
    fn certain_leaf() {
        let (s, a, _) = scenario(&[("a", 1.0, 2.0)], 0.0);
        for q in 0..50 {
            assert_eq!(
                simulate_once(
                    &N::leaf("a"),
                    &a,
                    &s,
                    "x",
                    q,
                    ExecutionModel::SequentialEdge
                )
                .unwrap(),
                (true, 2.0)
            );
        }
    }

    #[test]
    fn forced_fallback() {
        let (s, a, _) = scenario(&[("a", 0.0, 1.0), ("b", 1.0, 2.0)], 0.0);
        let g = N::cond(N::leaf("a"), N::leaf("b"));
        for q in 0..50 {
            assert_eq!(
                simulate_once(&g, &a, &s, "x", q, ExecutionModel::SequentialEdge).unwrap(),
                (true, 3.0)
            );
        }
    }

    #[test]
    fn sequential_product_within_binomial_band() {
        let (s, a, _) = scenario(&[("a", 0.9, 1.0), ("b", 0.8, 1.0)], 0.0);
        let g = N::seq(vec![N::leaf("a"), N::leaf("b")]);
        let p =
            PreparedConfig::from_graph(&g, &a, &s, "seq", ExecutionModel::SequentialEdge).unwrap();
        let m = p.measure(100_000).unwrap();
        let sigma = (0.72f64 * 0.28 / 100_000.0).sqrt();
        assert!((m.accuracy - 0.72).abs() <= 3.0 * sigma, "{}", m.accuracy);
    }

    #[test]
    fn matches_proxy_on_every_node_kind() {
        let (s, a, t) = scenario(
            &[
                ("a", 0.7, 1.0),
                ("b", 0.4, 2.0),
                ("c", 0.9, 0.5),
                ("d", 0.6, 3.0),
            ],
            0.0,
        );
        let g = N::seq(vec![
            N::or(vec![N::leaf("a"), N::leaf("b")]),
            N::cond(N::and(vec![N::leaf("c")]), N::leaf("d")),
        ]);
        let est = estimate_accuracy(&g, &a, &t).unwrap();
        let m = PreparedConfig::from_graph(&g, &a, &s, "mix", ExecutionModel::SequentialEdge)
            .unwrap()
            .measure(10_000)
            .unwrap();
        assert!((m.accuracy - est).abs() <= 4.0 * m.accuracy_se.unwrap());
        let lat = estimate_latency(&g, &a, &t, ExecutionModel::SequentialEdge).unwrap();
        assert!((m.latency - lat).abs() <= 4.0 * m.latency_se.unwrap());
    }

    #[test]
    fn unconditional_latency_is_exact() {
        let (s, a, t) = scenario(&[("a", 0.3, 1.25), ("b", 0.5, 2.5), ("c", 0.5, 0.75)], 0.0);
        let g = N::seq(vec![N::or(vec![N::leaf("a"), N::leaf("b")]), N::leaf("c")]);
        for exec in [ExecutionModel::SequentialEdge, ExecutionModel::CriticalPath] {
            let m = PreparedConfig::from_graph(&g, &a, &s, "u", exec)
                .unwrap()
                .measure(1000)
                .unwrap();
            let lat = estimate_latency(&g, &a, &t, exec).unwrap();
            assert!((m.latency - lat).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_sample_has_no_standard_errors() {
        let (s, a, _) = scenario(&[("a", 0.5, 1.0)], 0.0);
        let m = PreparedConfig::from_graph(
            &N::leaf("a"),
            &a,
            &s,
            "one",
            ExecutionModel::SequentialEdge,
        )
        .unwrap()
        .measure(1)
        .unwrap();
        assert_eq!(m.n_samples, 1);
        assert!(m.accuracy_se.is_none() && m.latency_se.is_none());
        assert!(matches!(
            PreparedConfig::from_graph(
                &N::leaf("a"),
                &a,
                &s,
                "one",
                ExecutionModel::SequentialEdge
            )
            .unwrap()
            .measure(0),
            Err(SimulatorError::ZeroSamples)
        ));
    }

    #[test]
    fn draws_are_order_independent() {
        let (s, a, _) = scenario(&[("a", 0.5, 1.0), ("b", 0.5, 1.0)], 0.3);
        let g = N::or(vec![N::leaf("a"), N::leaf("b")]);
        let p =
            PreparedConfig::from_graph(&g, &a, &s, "o", ExecutionModel::SequentialEdge).unwrap();
        let forward: Vec<_> = (0..100).map(|q| p.simulate_once(q)).collect();
        let backward: Vec<_> = (0..100).rev().map(|q| p.simulate_once(q)).collect();
        assert_eq!(forward, backward.into_iter().rev().collect::<Vec<_>>());
    }

    #[test]
    fn correlation_degrades_sequential_fidelity() {
        let mut bias = Vec::new();
        for rho in [0.0, 0.3, 0.6] {
            let (s, a, _) = scenario(&[("a", 0.7, 1.0), ("b", 0.6, 1.0)], rho);
            let g = N::seq(vec![N::leaf("a"), N::leaf("b")]);
            let m = PreparedConfig::from_graph(&g, &a, &s, "c", ExecutionModel::SequentialEdge)
                .unwrap()
                .measure(100_000)
                .unwrap();
            bias.push((m.accuracy - 0.42f64).abs());
        }
        assert!(bias[0] <= bias[1] && bias[1] <= bias[2], "{bias:?}");
    }

    #[test]
    fn missing_scenario_entry() {
        let (s, _, _) = scenario(&[("a", 0.5, 1.0)], 0.0);
        let a = RoleAssignment::from([("a".into(), SubAgentConfig::new("other", 1))]);
        assert!(matches!(
            simulate_once(
                &N::leaf("a"),
                &a,
                &s,
                "x",
                0,
                ExecutionModel::SequentialEdge
            ),
            Err(SimulatorError::MissingEntry { .. })
        ));
    }
}
