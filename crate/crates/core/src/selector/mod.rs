//! Deployment-time selection from a compiled set.

mod routing;

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::explorer::{CompiledEntry, CompiledSet};

pub use routing::{
    knn_route, knn_route_many, RouteDecision, RoutingOutcome, RoutingRecord, RoutingRecords,
    DEFAULT_K,
};

#[derive(Debug, Error, PartialEq)]
pub enum SelectorError {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("l_max must be positive and finite, got {0}")]
    InvalidLMax(f64),
    #[error("latency {latency} exceeds l_max {l_max}")]
    LatencyAboveLMax { latency: f64, l_max: f64 },
    #[error("accuracy {0} outside [0, 1]")]
    InvalidAccuracy(f64),
    #[error("infeasible budget: no entry has latency <= {0} s")]
    InfeasibleBudget(f64),
    #[error("compiled set is empty")]
    EmptySet,
    #[error("no measured value for selected configuration `{0}`")]
    MissingMeasurement(String),
    #[error("repetitions must be at least 1")]
    ZeroRepetitions,
    #[error("n_queries must be at least 1")]
    ZeroQueries,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("routing records are empty")]
    NoRecords,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("routing record {record} references unknown configuration `{id}`")]
    UnknownConfig { record: usize, id: String },
    #[error("no neighbor has an outcome for any compiled configuration")]
    NoOutcomes,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Accuracy weight of the utility; the latency weight is `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preference(f64);

impl Preference {
    pub fn new(alpha: f64) -> Result<Self, SelectorError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(SelectorError::InvalidAlpha(alpha))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// Normalization for latency scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityContext {
    l_max: f64,
}

impl UtilityContext {
    pub fn new(l_max: f64) -> Result<Self, SelectorError> {
        if l_max > 0.0 && l_max.is_finite() {
            Ok(Self { l_max })
        } else {
            Err(SelectorError::InvalidLMax(l_max))
        }
    }

    /// Context whose `l_max` is the largest estimated latency in `set`.
    pub fn from_set(set: &CompiledSet) -> Result<Self, SelectorError> {
        let last = set.entries.last().ok_or(SelectorError::EmptySet)?;
        Self::new(last.estimate.latency)
    }

    pub fn l_max(self) -> f64 {
        self.l_max
    }
}

/// `1 - latency / l_max`.
pub fn latency_efficiency(latency: f64, ctx: UtilityContext) -> Result<f64, SelectorError> {
    if !(latency >= 0.0 && latency <= ctx.l_max) {
        return Err(SelectorError::LatencyAboveLMax {
            latency,
            l_max: ctx.l_max,
        });
    }
    Ok(1.0 - latency / ctx.l_max)
}

/// `alpha * accuracy + (1 - alpha) * latency_efficiency`.
pub fn expected_utility(
    accuracy: f64,
    latency: f64,
    pref: Preference,
    ctx: UtilityContext,
) -> Result<f64, SelectorError> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(SelectorError::InvalidAccuracy(accuracy));
    }
    let les = latency_efficiency(latency, ctx)?;
    Ok(pref.0 * accuracy + (1.0 - pref.0) * les)
}

/// Most accurate entry whose estimated latency fits `budget`.
pub fn select_latency_constrained(
    set: &CompiledSet,
    budget: f64,
) -> Result<&CompiledEntry, SelectorError> {
    if set.is_empty() {
        return Err(SelectorError::EmptySet);
    }
    let k = set
        .entries
        .partition_point(|e| e.estimate.latency <= budget);
    if k == 0 {
        return Err(SelectorError::InfeasibleBudget(budget));
    }
    Ok(&set.entries[k - 1])
}

/// Index of the utility-maximizing entry; ties go to the lower latency, then the smaller id.
fn argmax_by(
    entries: &[CompiledEntry],
    mut utility: impl FnMut(&CompiledEntry) -> Result<Option<f64>, SelectorError>,
) -> Result<Option<(usize, f64)>, SelectorError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        let Some(u) = utility(e)? else { continue };
        let better = match best {
            None => true,
            Some((j, bu)) => {
                let b = &entries[j];
                u > bu
                    || (u == bu
                        && (e.estimate.latency < b.estimate.latency
                            || (e.estimate.latency == b.estimate.latency
                                && e.config.id < b.config.id)))
            }
        };
        if better {
            best = Some((i, u));
        }
    }
    Ok(best)
}

/// Entry with the highest estimated utility.
pub fn select_by_preference(
    set: &CompiledSet,
    pref: Preference,
    ctx: UtilityContext,
) -> Result<&CompiledEntry, SelectorError> {
    let (i, _) = argmax_by(&set.entries, |e| {
        expected_utility(e.estimate.accuracy, e.estimate.latency, pref, ctx).map(Some)
    })?
    .ok_or(SelectorError::EmptySet)?;
    Ok(&set.entries[i])
}

/// `0.05, 0.10, ..., 0.95`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub selected_id: String,
    pub proxy_utility: f64,
}

/// Preference selection at each alpha.
pub fn sweep_fixed(
    set: &CompiledSet,
    ctx: UtilityContext,
    alphas: &[f64],
) -> Result<Vec<SweepRow>, SelectorError> {
    alphas
        .iter()
        .map(|&alpha| {
            let pref = Preference::new(alpha)?;
            let e = select_by_preference(set, pref, ctx)?;
            Ok(SweepRow {
                alpha,
                selected_id: e.config.id.clone(),
                proxy_utility: expected_utility(
                    e.estimate.accuracy,
                    e.estimate.latency,
                    pref,
                    ctx,
                )?,
            })
        })
        .collect()
}

/// Mean measured utility under per-query random preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousResult {
    pub mean: f64,
    /// Sample standard deviation across repetitions; zero when `degenerate`.
    pub std: f64,
    /// Set when only one repetition was run.
    pub degenerate: bool,
    /// Mean measured utility of each repetition.
    pub per_repetition: Vec<f64>,
    /// Mean estimated utility of the same selections.
    pub proxy_per_repetition: Vec<f64>,
}

/// Draws `alpha ~ U(0, 1)` per query, selects on estimates, and scores on `measured`.
pub fn evaluate_heterogeneous(
    set: &CompiledSet,
    ctx: UtilityContext,
    measured: &BTreeMap<String, (f64, f64)>,
    n_queries: usize,
    repetitions: usize,
    seed: u64,
) -> Result<HeterogeneousResult, SelectorError> {
    if repetitions == 0 {
        return Err(SelectorError::ZeroRepetitions);
    }
    if n_queries == 0 {
        return Err(SelectorError::ZeroQueries);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_repetition = Vec::with_capacity(repetitions);
    let mut proxy_per_repetition = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let mut total = 0.0;
        let mut proxy_total = 0.0;
        for _ in 0..n_queries {
            let pref = Preference::new(rng.sample(Open01))?;
            let chosen = select_by_preference(set, pref, ctx)?;
            let &(acc, lat) = measured
                .get(&chosen.config.id)
                .ok_or_else(|| SelectorError::MissingMeasurement(chosen.config.id.clone()))?;
            total += expected_utility(acc, lat, pref, ctx)?;
            proxy_total +=
                expected_utility(chosen.estimate.accuracy, chosen.estimate.latency, pref, ctx)?;
        }
        per_repetition.push(total / n_queries as f64);
        proxy_per_repetition.push(proxy_total / n_queries as f64);
    }
    let n = per_repetition.len() as f64;
    let mean = per_repetition.iter().sum::<f64>() / n;
    let degenerate = repetitions == 1;
    let std = if degenerate {
        0.0
    } else {
        (per_repetition
            .iter()
            .map(|u| (u - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    };
    Ok(HeterogeneousResult {
        mean,
        std,
        degenerate,
        per_repetition,
        proxy_per_repetition,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::explorer::{CompiledMetadata, WorkflowConfiguration};
    use crate::profile::SubAgentConfig;
    use crate::proxy::{Estimate, ExecutionModel, RoleAssignment};
    use crate::workflow::StructuralAssignment;
    use approx::assert_relative_eq;

    pub(crate) fn staircase(points: &[(f64, f64)]) -> CompiledSet {
        let entries = points
            .iter()
            .enumerate()
            .map(|(i, &(a, l))| CompiledEntry {
                config: WorkflowConfiguration::new(
                    StructuralAssignment::default(),
                    RoleAssignment::from([("r".into(), SubAgentConfig::new("m", i as u32 + 1))]),
                ),
                estimate: Estimate::new(a, l),
            })
            .collect();
        let set = CompiledSet {
            metadata: CompiledMetadata {
                tool_version: crate::TOOL_VERSION.into(),
                spec_name: "s".into(),
                profile_source: "p".into(),
                execution_model: ExecutionModel::SequentialEdge,
                proxy_version: "analytic-v1".into(),
                epsilon: 0.0,
                restricted: false,
                full_space_size: points.len().to_string(),
                pruned_space_size: points.len().to_string(),
                explored_count: points.len() as u64,
                roles: BTreeMap::new(),
            },
            entries,
        };
        set.validate().unwrap();
        set
    }

    fn ctx(l: f64) -> UtilityContext {
        UtilityContext::new(l).unwrap()
    }

    #[test]
    fn latency_efficiency_cases() {
        assert_eq!(latency_efficiency(25.0, ctx(100.0)).unwrap(), 0.75);
        assert_eq!(latency_efficiency(0.0, ctx(100.0)).unwrap(), 1.0);
        assert_eq!(latency_efficiency(100.0, ctx(100.0)).unwrap(), 0.0);
        assert!(latency_efficiency(101.0, ctx(100.0)).is_err());
    }

    #[test]
    fn utility_cases() {
        let u = expected_utility(0.9, 25.0, Preference::new(0.6).unwrap(), ctx(100.0)).unwrap();
        assert_relative_eq!(u, 0.84, max_relative = 1e-12);
        for a in [0.01, 0.5, 0.99] {
            assert_eq!(
                expected_utility(1.0, 0.0, Preference::new(a).unwrap(), ctx(3.0)).unwrap(),
                1.0
            );
        }
        assert!(Preference::new(0.0).is_err() && Preference::new(1.0).is_err());
    }

    #[test]
    fn budget_selection() {
        let set = staircase(&[(0.6, 1.0), (0.9, 5.0), (0.95, 9.0)]);
        assert_eq!(
            select_latency_constrained(&set, 6.0).unwrap().estimate,
            Estimate::new(0.9, 5.0)
        );
        assert_eq!(
            select_latency_constrained(&set, 100.0).unwrap().estimate,
            Estimate::new(0.95, 9.0)
        );
        let err = select_latency_constrained(&set, 0.5).unwrap_err();
        assert!(err.to_string().contains("infeasible budget"));
    }

    #[test]
    fn preference_limits_and_oracle() {
        let two = staircase(&[(0.6, 1.0), (0.9, 5.0)]);
        let c = ctx(10.0);
        assert_eq!(
            select_by_preference(&two, Preference::new(0.01).unwrap(), c)
                .unwrap()
                .estimate
                .latency,
            1.0
        );
        assert_eq!(
            select_by_preference(&two, Preference::new(0.99).unwrap(), c)
                .unwrap()
                .estimate
                .latency,
            5.0
        );

        let three = staircase(&[(0.6, 1.0), (0.9, 5.0), (0.95, 9.0)]);
        let pref = Preference::new(0.5).unwrap();
        let chosen = select_by_preference(&three, pref, c).unwrap();
        let best = three
            .entries
            .iter()
            .map(|e| expected_utility(e.estimate.accuracy, e.estimate.latency, pref, c).unwrap())
            .fold(f64::MIN, f64::max);
        assert_eq!(
            expected_utility(chosen.estimate.accuracy, chosen.estimate.latency, pref, c).unwrap(),
            best
        );
    }

    #[test]
    fn sweep_grid_and_singleton() {
        assert_eq!(default_alpha_grid().len(), 19);
        let one = staircase(&[(0.7, 2.0)]);
        let rows = sweep_fixed(&one, ctx(2.0), &default_alpha_grid()).unwrap();
        assert_eq!(rows.len(), 19);
        assert!(rows.iter().all(|r| r.selected_id == rows[0].selected_id));
    }

    #[test]
    fn heterogeneous_singleton_matches_expectation() {
        let set = staircase(&[(0.8, 2.0)]);
        let c = ctx(8.0);
        let measured = BTreeMap::from([(set.entries[0].config.id.clone(), (0.8, 2.0))]);
        let r = evaluate_heterogeneous(&set, c, &measured, 2000, 10, 4).unwrap();
        let (acc, les) = (0.8, 0.75);
        let analytic = 0.5 * acc + 0.5 * les;
        let se = (acc - les) / (12.0 * 20_000.0f64).sqrt();
        assert!((r.mean - analytic).abs() <= 3.0 * se);
        let single = evaluate_heterogeneous(&set, c, &measured, 10, 1, 4).unwrap();
        assert!(single.degenerate && single.std == 0.0);
    }

    #[test]
    fn heterogeneous_selection_ignores_measurements() {
        let set = staircase(&[(0.6, 1.0), (0.9, 5.0), (0.95, 9.0)]);
        let c = ctx(10.0);
        let a: BTreeMap<String, (f64, f64)> = set
            .entries
            .iter()
            .map(|e| {
                (
                    e.config.id.clone(),
                    (e.estimate.accuracy, e.estimate.latency),
                )
            })
            .collect();
        let b: BTreeMap<String, (f64, f64)> = a
            .iter()
            .map(|(k, &(acc, lat))| (k.clone(), (acc * 0.5, lat)))
            .collect();
        let ra = evaluate_heterogeneous(&set, c, &a, 300, 3, 1).unwrap();
        let rb = evaluate_heterogeneous(&set, c, &b, 300, 3, 1).unwrap();
        assert_ne!(ra.mean, rb.mean);
        let missing = BTreeMap::new();
        assert!(matches!(
            evaluate_heterogeneous(&set, c, &missing, 1, 1, 1),
            Err(SelectorError::MissingMeasurement(_))
        ));
    }
}
