//! Exhaustive frontier checks and local order checks against the simulator.

use num_bigint::BigUint;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{MeasuredPoint, PreparedConfig, SimulatorError, TruthScenario};
use crate::explorer::{
    nondominated_sort_2d, CompiledSet, FrontierPoint, Restriction, SearchSpace,
    WorkflowConfiguration,
};
use crate::metrics::{
    calibrated_mae, hypervolume_2d, pairwise_agreement, spearman, MetricsError, PairedSeries,
};
use crate::profile::ProfileTable;
use crate::proxy::{estimate, Estimate, ExecutionModel};
use crate::workflow::WorkflowSpec;

pub const DEFAULT_SPACE_CAP: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOptions {
    pub n_samples: u64,
    /// Largest space that may be measured exhaustively.
    pub cap: u64,
    pub exec: ExecutionModel,
    pub workers: Option<usize>,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            n_samples: 20_000,
            cap: DEFAULT_SPACE_CAP,
            exec: ExecutionModel::SequentialEdge,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceRow {
    pub config: WorkflowConfiguration,
    pub estimate: Estimate,
    pub measured: MeasuredPoint,
}

/// Every configuration of a restricted space, estimated and measured.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub rows: Vec<BruteForceRow>,
    /// Row indices of the non-dominated set under measured values.
    pub measured_frontier: Vec<usize>,
    /// Row indices of the non-dominated set under proxy estimates.
    pub proxy_frontier: Vec<usize>,
}

/// Hypervolume of the proxy frontier's measured points relative to the measured frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierConsistency {
    /// `(accuracy, latency)` corner of the hypervolume box.
    pub reference: (f64, f64),
    pub proxy_hypervolume: f64,
    pub measured_hypervolume: f64,
    pub ratio: f64,
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, SimulatorError> {
    match workers {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SimulatorError::Workers(e.to_string()))?
            .install(job)),
        None => Ok(job()),
    }
}

/// Measures each configuration independently; results keep input order.
pub fn measure_many(
    spec: &WorkflowSpec,
    configs: &[WorkflowConfiguration],
    scenario: &TruthScenario,
    n_samples: u64,
    exec: ExecutionModel,
    workers: Option<usize>,
) -> Result<Vec<MeasuredPoint>, SimulatorError> {
    with_workers(workers, || {
        configs
            .par_iter()
            .map(|c| PreparedConfig::new(spec, c, scenario, exec)?.measure(n_samples))
            .collect()
    })?
}

/// Estimates and measures every configuration of a restricted space.
pub fn brute_force_frontier(
    spec: &WorkflowSpec,
    table: &ProfileTable,
    scenario: &TruthScenario,
    restriction: &Restriction,
    options: &BruteForceOptions,
) -> Result<BruteForceResult, SimulatorError> {
    let space = SearchSpace::restricted(spec, restriction)?;
    let size = space.size();
    if size > BigUint::from(options.cap) {
        return Err(SimulatorError::SpaceTooLarge {
            size: size.to_string(),
            cap: options.cap,
        });
    }
    let configs: Vec<WorkflowConfiguration> = space.configurations().collect();
    let rows = with_workers(options.workers, || {
        configs
            .into_par_iter()
            .map(|config| {
                let est = estimate(
                    spec,
                    &config.structural,
                    &config.assignment,
                    table,
                    options.exec,
                )?;
                let measured = PreparedConfig::new(spec, &config, scenario, options.exec)?
                    .measure(options.n_samples)?;
                Ok(BruteForceRow {
                    config,
                    estimate: est,
                    measured,
                })
            })
            .collect::<Result<Vec<_>, SimulatorError>>()
    })??;
    let frontier = |f: &dyn Fn(&BruteForceRow) -> (f64, f64)| {
        let points: Vec<FrontierPoint> = rows
            .iter()
            .map(|r| {
                let (a, l) = f(r);
                FrontierPoint::new(a, l, r.config.id.clone())
            })
            .collect();
        nondominated_sort_2d(&points, 0.0)
    };
    let measured_frontier = frontier(&|r| (r.measured.accuracy, r.measured.latency))?;
    let proxy_frontier = frontier(&|r| (r.estimate.accuracy, r.estimate.latency))?;
    Ok(BruteForceResult {
        rows,
        measured_frontier,
        proxy_frontier,
    })
}

impl BruteForceResult {
    /// Reference box: accuracy 0 and the largest measured latency.
    pub fn consistency(&self) -> Result<FrontierConsistency, SimulatorError> {
        let lat_max = self
            .rows
            .iter()
            .map(|r| r.measured.latency)
            .fold(0.0, f64::max);
        let reference = (0.0, lat_max);
        let measured_points = |idx: &[usize]| -> Vec<(f64, f64)> {
            idx.iter()
                .map(|&i| {
                    (
                        self.rows[i].measured.accuracy,
                        self.rows[i].measured.latency,
                    )
                })
                .collect()
        };
        let proxy_hypervolume = hypervolume_2d(&measured_points(&self.proxy_frontier), reference)?;
        let measured_hypervolume =
            hypervolume_2d(&measured_points(&self.measured_frontier), reference)?;
        let ratio = if measured_hypervolume > 0.0 {
            proxy_hypervolume / measured_hypervolume
        } else {
            1.0
        };
        Ok(FrontierConsistency {
            reference,
            proxy_hypervolume,
            measured_hypervolume,
            ratio,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub id: String,
    pub estimate: Estimate,
    pub measured: MeasuredPoint,
}

/// Rank and calibration agreement for one objective.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderMetrics {
    pub spearman: Result<f64, MetricsError>,
    pub pairwise_agreement: f64,
    pub calibrated_mae: Result<f64, MetricsError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub rows: Vec<OrderRow>,
    pub accuracy: OrderMetrics,
    pub latency: OrderMetrics,
}

fn order_metrics(
    rows: &[OrderRow],
    f: impl Fn(&OrderRow) -> (f64, f64),
) -> Result<OrderMetrics, SimulatorError> {
    let (est, meas): (Vec<f64>, Vec<f64>) = rows.iter().map(f).unzip();
    let series = PairedSeries::with_ids(est, meas, rows.iter().map(|r| r.id.clone()).collect())?;
    Ok(OrderMetrics {
        spearman: spearman(&series),
        pairwise_agreement: pairwise_agreement(&series),
        calibrated_mae: calibrated_mae(&series),
    })
}

/// Measures a seeded sample of compiled entries and compares them with their estimates.
pub fn order_validation(
    spec: &WorkflowSpec,
    set: &CompiledSet,
    scenario: &TruthScenario,
    n_samples: u64,
    sample_size: usize,
    seed: u64,
    exec: ExecutionModel,
) -> Result<OrderReport, SimulatorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amount = sample_size.min(set.len());
    let mut picked = sample(&mut rng, set.len(), amount).into_vec();
    picked.sort_unstable();
    let rows = picked
        .into_par_iter()
        .map(|i| {
            let entry = &set.entries[i];
            let measured =
                PreparedConfig::new(spec, &entry.config, scenario, exec)?.measure(n_samples)?;
            Ok(OrderRow {
                id: entry.config.id.clone(),
                estimate: entry.estimate,
                measured,
            })
        })
        .collect::<Result<Vec<_>, SimulatorError>>()?;
    Ok(OrderReport {
        accuracy: order_metrics(&rows, |r| (r.estimate.accuracy, r.measured.accuracy))?,
        latency: order_metrics(&rows, |r| (r.estimate.latency, r.measured.latency))?,
        rows,
    })
}
