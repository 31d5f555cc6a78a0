//! Command implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use wfc_core::explorer::{
    explore, load_compiled_set, nondominated_sort_2d, save_compiled_set, ExploreOptions,
    FrontierPoint, Restriction, SearchSpace,
};
use wfc_core::profile::{load_profiles, load_profiles_csv, prune_profiles};
use wfc_core::selector::{
    default_alpha_grid, evaluate_heterogeneous, expected_utility, knn_route_many,
    select_by_preference, select_latency_constrained, sweep_fixed, Preference, RoutingRecords,
    UtilityContext, DEFAULT_K,
};
use wfc_core::simulator::{
    brute_force_frontier, measure_many, order_validation, BruteForceOptions, MeasuredPoint,
    TruthScenario, DEFAULT_SPACE_CAP,
};
use wfc_core::workflow::parse_workflow_spec;
use wfc_core::{
    CompiledEntry, CompiledSet, ExecutionModel, ProfileError, ProfileTable, WorkflowConfiguration,
    WorkflowSpec,
};

use crate::config::{pick, require, FileConfig};
use crate::error::{warning, CliError};
use crate::manifest::RunManifest;
use crate::tables::{measurements_csv, read_measurements, to_csv};
use crate::{
    Command, CompileArgs, CountArgs, HeteroArgs, ReportArgs, RouteArgs, SelectArgs, SimulateArgs,
    SweepArgs, ValidateArgs, ValidateMode,
};

pub const DEFAULT_SAMPLES: u64 = 20_000;
pub const DEFAULT_QUERIES: usize = 1000;
pub const DEFAULT_REPETITIONS: usize = 10;
pub const DEFAULT_SAMPLE_SIZE: usize = 20;

pub fn dispatch(command: &Command, config: &FileConfig) -> Result<(), CliError> {
    match command {
        Command::Compile(a) => compile(a, config),
        Command::Count(a) => count(a, config),
        Command::Select(a) => select(a, config),
        Command::Sweep(a) => sweep(a, config),
        Command::HeteroEval(a) => hetero_eval(a, config),
        Command::Route(a) => route(a, config),
        Command::Simulate(a) => simulate(a, config),
        Command::Validate(a) => validate(a, config),
        Command::Report(a) => report(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))
}

fn with_path<E: Into<CliError>>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| {
        let mut err: CliError = e.into();
        err.message = format!("{}: {}", path.display(), err.message);
        err
    }
}

pub fn load_spec(path: &Path) -> Result<WorkflowSpec, CliError> {
    parse_workflow_spec(&read(path)?).map_err(with_path(path))
}

pub fn load_table(path: &Path) -> Result<ProfileTable, CliError> {
    let text = read(path)?;
    let table = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        load_profiles_csv(&text, path.display().to_string())
    } else {
        load_profiles(&text)
    };
    table.map_err(with_path(path))
}

fn load_restriction(path: Option<&Path>) -> Result<Option<Restriction>, CliError> {
    path.map(|p| Restriction::from_json(&read(p)?).map_err(with_path(p)))
        .transpose()
}

fn load_set(path: &Path) -> Result<CompiledSet, CliError> {
    load_compiled_set(path).map_err(with_path(path))
}

fn load_scenario(path: &Path, seed: u64) -> Result<TruthScenario, CliError> {
    let mut s = TruthScenario::from_json(&read(path)?).map_err(with_path(path))?;
    s.seed = seed;
    Ok(s)
}

/// Writes to stdout; a closed pipe is not an error.
fn stdout(text: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush());
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(&path.display().to_string(), e))
}

/// Writes to `out` with a manifest, or prints to stdout.
fn emit(
    out: Option<&Path>,
    text: &str,
    manifest: RunManifest,
    started: Instant,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write(path, text)?;
            manifest.write_for(path, started.elapsed().as_secs_f64())?;
        }
        None => stdout(text),
    }
    Ok(())
}

fn exec_of(
    flag: Option<crate::ExecArg>,
    config: &FileConfig,
    default: ExecutionModel,
) -> ExecutionModel {
    pick(flag.map(Into::into), config.exec, default)
}

fn warn_exec(set: &CompiledSet, exec: ExecutionModel) {
    if let Some(w) = set.execution_model_warning(exec) {
        eprintln!("{}", warning(&w));
    }
}

fn compile(a: &CompileArgs, config: &FileConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = load_spec(&a.spec)?;
    let table = load_table(&a.profiles)?;
    let restriction = load_restriction(a.restriction.as_deref())?;
    let options = ExploreOptions {
        exec: exec_of(a.exec, config, ExecutionModel::SequentialEdge),
        epsilon: pick(a.epsilon, config.epsilon, 0.0),
        workers: a.workers.or(config.workers),
        prune: !a.no_prune,
        restriction,
    };
    let mut set = explore(&spec, &table, &options)?;
    set.metadata.profile_source = a.profiles.file_name().map_or_else(
        || table.metadata.source.clone(),
        |n| n.to_string_lossy().into_owned(),
    );
    set.validate()
        .map_err(|e| CliError::internal(format!("compiled set failed its own invariants: {e}")))?;
    save_compiled_set(&set, &a.out).map_err(with_path(&a.out))?;

    let mut manifest = RunManifest::new("compile");
    manifest.input(&a.spec)?;
    manifest.input(&a.profiles)?;
    if let Some(r) = &a.restriction {
        manifest.input(r)?;
    }
    manifest.execution_model = Some(options.exec.to_string());
    manifest.epsilon = Some(options.epsilon);
    manifest.param("prune", options.prune);
    manifest.param("workers", options.workers);
    manifest.write_for(&a.out, started.elapsed().as_secs_f64())?;

    let m = &set.metadata;
    stdout(&format!(
        "full space:     {} configurations\n",
        m.full_space_size
    ));
    stdout(&format!(
        "pruned space:   {} configurations\n",
        m.pruned_space_size
    ));
    stdout(&format!("explored:       {}\n", m.explored_count));
    stdout(&format!("compiled set:   {} entries\n", set.len()));
    for (role, r) in &m.roles {
        stdout(&format!("  {role}: {} -> {} options\n", r.before, r.after));
    }
    Ok(())
}

fn count(a: &CountArgs, config: &FileConfig) -> Result<(), CliError> {
    let spec = load_spec(&a.spec)?;
    let restriction = load_restriction(a.restriction.as_deref())?.unwrap_or_default();
    let space = SearchSpace::restricted(&spec, &restriction)?;
    let mut report = json!({
        "spec": spec.name,
        "structural_variants": space.variants.len(),
        "space_size": space.size().to_string(),
    });
    if let Some(path) = &a.profiles {
        let table = load_table(path)?;
        let epsilon = pick(a.epsilon, config.epsilon, 0.0);
        let mut kept_options = BTreeMap::new();
        let mut roles = serde_json::Map::new();
        for (role, options) in &space.options {
            let profiles = options
                .iter()
                .map(|c| {
                    table.get(role, c).cloned().ok_or_else(|| {
                        CliError::input(
                            "missing_profile",
                            format!("no profile for role `{role}` under {c}"),
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let pruned = prune_profiles(role.clone(), profiles, epsilon)
                .map_err(|e: ProfileError| CliError::from(e))?;
            roles.insert(
                role.to_string(),
                json!({"declared": options.len(), "kept": pruned.len()}),
            );
            kept_options.insert(
                role.clone(),
                pruned.kept.into_iter().map(|p| p.config).collect(),
            );
        }
        let pruned_space = SearchSpace::restricted(
            &spec,
            &Restriction {
                structures: restriction.structures.clone(),
                options: kept_options,
            },
        )?;
        report["epsilon"] = json!(epsilon);
        report["roles"] = serde_json::Value::Object(roles);
        report["pruned_space_size"] = json!(pruned_space.size().to_string());
    }
    stdout(&format!(
        "{}\n",
        serde_json::to_string_pretty(&report).expect("json")
    ));
    Ok(())
}

fn entry_json(e: &CompiledEntry) -> serde_json::Value {
    json!({
        "id": e.config.id,
        "structural": e.config.structural.values(),
        "assignment": e.config.assignment,
        "est_accuracy": e.estimate.accuracy,
        "est_latency_s": e.estimate.latency,
    })
}

/// Explicit `l_max`, else the largest latency among estimates and supplied measurements.
fn context(
    flag: Option<f64>,
    config: &FileConfig,
    set: &CompiledSet,
    extra: impl IntoIterator<Item = f64>,
) -> Result<UtilityContext, CliError> {
    if set.is_empty() {
        return Err(CliError::input("artifact", "compiled set is empty"));
    }
    let derived = set
        .entries
        .iter()
        .map(|e| e.estimate.latency)
        .chain(extra)
        .fold(0.0, f64::max);
    let l_max = match flag.or(config.lmax) {
        Some(l) => l,
        None if derived > 0.0 => derived,
        None => f64::MIN_POSITIVE,
    };
    Ok(UtilityContext::new(l_max)?)
}

fn select(a: &SelectArgs, config: &FileConfig) -> Result<(), CliError> {
    let set = load_set(&a.artifact)?;
    if let Some(exec) = a.exec {
        warn_exec(&set, exec.into());
    }
    let chosen = match (a.budget, a.alpha) {
        (Some(budget), _) => {
            let e = select_latency_constrained(&set, budget)?;
            let mut v = entry_json(e);
            v["budget_s"] = json!(budget);
            v
        }
        (None, alpha) => {
            let pref = Preference::new(require(alpha, config.alpha, "alpha")?)?;
            let ctx = context(a.lmax, config, &set, [])?;
            let e = select_by_preference(&set, pref, ctx)?;
            let mut v = entry_json(e);
            v["alpha"] = json!(pref.alpha());
            v["l_max"] = json!(ctx.l_max());
            v["utility"] = json!(expected_utility(
                e.estimate.accuracy,
                e.estimate.latency,
                pref,
                ctx
            )?);
            v
        }
    };
    stdout(&format!(
        "{}\n",
        serde_json::to_string_pretty(&chosen).expect("json")
    ));
    Ok(())
}

fn measured_pairs(points: &BTreeMap<String, MeasuredPoint>) -> BTreeMap<String, (f64, f64)> {
    points
        .iter()
        .map(|(id, p)| (id.clone(), (p.accuracy, p.latency)))
        .collect()
}

#[derive(Serialize)]
struct SweepCsvRow {
    alpha: f64,
    selected_id: String,
    proxy_utility: f64,
    measured_utility: Option<f64>,
}

fn sweep(a: &SweepArgs, config: &FileConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let set = load_set(&a.artifact)?;
    let measured = a
        .measured
        .as_deref()
        .map(read_measurements)
        .transpose()?
        .unwrap_or_default();
    let relevant: Vec<f64> = set
        .entries
        .iter()
        .filter_map(|e| measured.get(&e.config.id).map(|p| p.latency))
        .collect();
    let ctx = context(a.lmax, config, &set, relevant)?;
    let alphas = a.alphas.clone().unwrap_or_else(default_alpha_grid);
    let rows = sweep_fixed(&set, ctx, &alphas)?
        .into_iter()
        .map(|r| {
            let measured_utility = match measured.get(&r.selected_id) {
                Some(p) => Some(expected_utility(
                    p.accuracy,
                    p.latency,
                    Preference::new(r.alpha)?,
                    ctx,
                )?),
                None => None,
            };
            Ok(SweepCsvRow {
                alpha: r.alpha,
                selected_id: r.selected_id,
                proxy_utility: r.proxy_utility,
                measured_utility,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let text = to_csv("sweep", &[("l_max", ctx.l_max().to_string())], &rows)?;
    let mut manifest = RunManifest::new("sweep");
    manifest.input(&a.artifact)?;
    if let Some(m) = &a.measured {
        manifest.input(m)?;
    }
    manifest.param("l_max", ctx.l_max());
    manifest.param("alphas", &alphas);
    emit(a.out.as_deref(), &text, manifest, started)
}

#[derive(Serialize)]
struct HeteroCsvRow {
    repetition: usize,
    proxy_utility: f64,
    measured_utility: f64,
}

fn hetero_eval(a: &HeteroArgs, config: &FileConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let set = load_set(&a.artifact)?;
    let measured = read_measurements(&a.measured)?;
    let seed = require(a.seed, config.seed, "seed")?;
    let queries = pick(a.queries, config.queries, DEFAULT_QUERIES);
    let repetitions = pick(a.repetitions, config.repetitions, DEFAULT_REPETITIONS);
    let relevant: Vec<f64> = set
        .entries
        .iter()
        .filter_map(|e| measured.get(&e.config.id).map(|p| p.latency))
        .collect();
    let ctx = context(a.lmax, config, &set, relevant)?;
    let r = evaluate_heterogeneous(
        &set,
        ctx,
        &measured_pairs(&measured),
        queries,
        repetitions,
        seed,
    )?;
    let rows: Vec<HeteroCsvRow> = r
        .per_repetition
        .iter()
        .zip(&r.proxy_per_repetition)
        .enumerate()
        .map(|(i, (&m, &p))| HeteroCsvRow {
            repetition: i,
            proxy_utility: p,
            measured_utility: m,
        })
        .collect();
    let summary = json!({
        "mean": r.mean,
        "std": r.std,
        "degenerate": r.degenerate,
        "l_max": ctx.l_max(),
        "queries": queries,
        "repetitions": repetitions,
        "seed": seed,
    });
    if r.degenerate {
        eprintln!(
            "{}",
            warning("one repetition: standard deviation is reported as 0")
        );
    }
    let text = to_csv("hetero-eval", &[("l_max", ctx.l_max().to_string())], &rows)?;
    let mut manifest = RunManifest::new("hetero-eval");
    manifest.input(&a.artifact)?;
    manifest.input(&a.measured)?;
    manifest.seeds.insert("seed".into(), seed);
    manifest.param("l_max", ctx.l_max());
    manifest.param("queries", queries);
    manifest.param("repetitions", repetitions);
    manifest.param("summary", &summary);
    match &a.out {
        Some(path) => {
            emit(Some(path), &text, manifest, started)?;
            stdout(&format!(
                "{}\n",
                serde_json::to_string_pretty(&summary).expect("json")
            ));
        }
        None => {
            stdout(&text);
            eprintln!("{summary}");
        }
    }
    Ok(())
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryFile {
    dim: usize,
    queries: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct RouteCsvRow {
    query: usize,
    selected_id: String,
    utility: f64,
    neighbors: String,
}

fn route(a: &RouteArgs, config: &FileConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let set = load_set(&a.artifact)?;
    let records = RoutingRecords::from_json(&read(&a.records)?).map_err(with_path(&a.records))?;
    records.check_against(&set).map_err(with_path(&a.records))?;
    let queries = match (&a.queries, &a.features) {
        (Some(path), _) => {
            let q: QueryFile = serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::input("queries", format!("{}: {e}", path.display())))?;
            if let Some(bad) = q.queries.iter().find(|v| v.len() != q.dim) {
                return Err(CliError::input(
                    "queries",
                    format!(
                        "{}: query of dimension {} in a file declaring {}",
                        path.display(),
                        bad.len(),
                        q.dim
                    ),
                ));
            }
            q.queries
        }
        (None, Some(f)) => vec![f.clone()],
        (None, None) => {
            return Err(CliError::input(
                "usage",
                "one of --queries or --features is required",
            ))
        }
    };
    let k = pick(a.k, config.k, DEFAULT_K);
    let pref = Preference::new(require(a.alpha, config.alpha, "alpha")?)?;
    let record_latencies: Vec<f64> = records
        .records
        .iter()
        .flat_map(|r| r.outcomes.values().map(|o| o.latency_s))
        .collect();
    let ctx = context(a.lmax, config, &set, record_latencies)?;
    let decisions = knn_route_many(&queries, &records.records, &set, k, pref, ctx);
    let mut rows = Vec::with_capacity(decisions.len());
    let mut warned = false;
    for (i, d) in decisions.into_iter().enumerate() {
        let d = d?;
        if let (Some(w), false) = (&d.warning, warned) {
            eprintln!("{}", warning(w));
            warned = true;
        }
        rows.push(RouteCsvRow {
            query: i,
            selected_id: d.entry.config.id.clone(),
            utility: d.utility,
            neighbors: d
                .neighbors
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        });
    }
    let text = to_csv(
        "route",
        &[
            ("k", k.to_string()),
            ("alpha", pref.alpha().to_string()),
            ("l_max", ctx.l_max().to_string()),
        ],
        &rows,
    )?;
    let mut manifest = RunManifest::new("route");
    manifest.input(&a.artifact)?;
    manifest.input(&a.records)?;
    if let Some(q) = &a.queries {
        manifest.input(q)?;
    }
    manifest.param("k", k);
    manifest.param("alpha", pref.alpha());
    manifest.param("l_max", ctx.l_max());
    emit(a.out.as_deref(), &text, manifest, started)
}

fn check_spec_name(set: &CompiledSet, spec: &WorkflowSpec) {
    if set.metadata.spec_name != spec.name {
        eprintln!(
            "{}",
            warning(&format!(
                "artifact was compiled from spec `{}` but `{}` was supplied",
                set.metadata.spec_name, spec.name
            ))
        );
    }
}

fn simulate(a: &SimulateArgs, config: &FileConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let set = load_set(&a.artifact)?;
    let spec = load_spec(&a.spec)?;
    check_spec_name(&set, &spec);
    let seed = require(a.seed, config.seed, "seed")?;
    let scenario = load_scenario(&a.scenario, seed)?;
    let samples = pick(a.samples, config.samples, DEFAULT_SAMPLES);
    let exec = exec_of(a.exec, config, set.metadata.execution_model);
    warn_exec(&set, exec);
    let workers = a.workers.or(config.workers);
    let configs: Vec<WorkflowConfiguration> =
        set.entries.iter().map(|e| e.config.clone()).collect();
    let points = measure_many(&spec, &configs, &scenario, samples, exec, workers)?;
    let text = measurements_csv(&points)?;
    let mut manifest = RunManifest::new("simulate");
    manifest.input(&a.artifact)?;
    manifest.input(&a.spec)?;
    manifest.input(&a.scenario)?;
    manifest.seeds.insert("seed".into(), seed);
    manifest.execution_model = Some(exec.to_string());
    manifest.param("samples", samples);
    emit(Some(&a.out), &text, manifest, started)?;
    stdout(&format!(
        "measured {} configurations x {samples} queries\n",
        points.len()
    ));
    Ok(())
}

#[derive(Serialize)]
struct FrontierCsvRow<'a> {
    id: &'a str,
    est_accuracy: f64,
    est_latency_s: f64,
    meas_accuracy: f64,
    meas_latency_s: f64,
    proxy_frontier: bool,
    measured_frontier: bool,
}

#[derive(Serialize)]
struct OrderCsvRow<'a> {
    id: &'a str,
    est_accuracy: f64,
    meas_accuracy: f64,
    est_latency_s: f64,
    meas_latency_s: f64,
}

fn metric_json(r: &Result<f64, wfc_core::metrics::MetricsError>) -> serde_json::Value {
    match r {
        Ok(v) => json!(v),
        Err(e) => json!({"undefined": e.to_string()}),
    }
}

fn validate(a: &ValidateArgs, config: &FileConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let spec = load_spec(&a.spec)?;
    let seed = require(a.seed, config.seed, "seed")?;
    let scenario = load_scenario(&a.scenario, seed)?;
    let samples = pick(a.samples, config.samples, DEFAULT_SAMPLES);
    let set = a.artifact.as_deref().map(load_set).transpose()?;
    if let Some(set) = &set {
        check_spec_name(set, &spec);
    }
    let default_exec = set.as_ref().map_or(ExecutionModel::SequentialEdge, |s| {
        s.metadata.execution_model
    });
    let exec = exec_of(a.exec, config, default_exec);
    let workers = a.workers.or(config.workers);
    let mut manifest = RunManifest::new("validate");
    manifest.input(&a.spec)?;
    manifest.input(&a.scenario)?;
    if let Some(p) = &a.artifact {
        manifest.input(p)?;
    }
    manifest.seeds.insert("seed".into(), seed);
    manifest.execution_model = Some(exec.to_string());
    manifest.param("samples", samples);

    let (text, summary) = match a.mode {
        ValidateMode::Frontier => {
            let profiles = a.profiles.as_deref().ok_or_else(|| {
                CliError::input("usage", "--profiles is required in frontier mode")
            })?;
            let table = load_table(profiles)?;
            let restriction = load_restriction(a.restriction.as_deref())?.unwrap_or_default();
            manifest.input(profiles)?;
            if let Some(r) = &a.restriction {
                manifest.input(r)?;
            }
            let cap = pick(a.cap, config.cap, DEFAULT_SPACE_CAP);
            manifest.param("cap", cap);
            let options = BruteForceOptions {
                n_samples: samples,
                cap,
                exec,
                workers,
            };
            let result = brute_force_frontier(&spec, &table, &scenario, &restriction, &options)?;
            let consistency = result.consistency()?;
            let proxy: BTreeSet<usize> = result.proxy_frontier.iter().copied().collect();
            let measured: BTreeSet<usize> = result.measured_frontier.iter().copied().collect();
            let rows: Vec<FrontierCsvRow> = result
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| FrontierCsvRow {
                    id: &r.config.id,
                    est_accuracy: r.estimate.accuracy,
                    est_latency_s: r.estimate.latency,
                    meas_accuracy: r.measured.accuracy,
                    meas_latency_s: r.measured.latency,
                    proxy_frontier: proxy.contains(&i),
                    measured_frontier: measured.contains(&i),
                })
                .collect();
            let mut summary = json!({
                "mode": "frontier",
                "configurations": result.rows.len(),
                "proxy_frontier_size": proxy.len(),
                "measured_frontier_size": measured.len(),
                "reference_accuracy": consistency.reference.0,
                "reference_latency_s": consistency.reference.1,
                "proxy_hypervolume": consistency.proxy_hypervolume,
                "measured_hypervolume": consistency.measured_hypervolume,
                "hypervolume_ratio": consistency.ratio,
            });
            if let Some(set) = &set {
                let compiled: BTreeSet<&str> =
                    set.entries.iter().map(|e| e.config.id.as_str()).collect();
                let proxy_ids: BTreeSet<&str> = proxy
                    .iter()
                    .map(|&i| result.rows[i].config.id.as_str())
                    .collect();
                summary["artifact_matches_proxy_frontier"] = json!(compiled == proxy_ids);
            }
            (to_csv("frontier-validation", &[], &rows)?, summary)
        }
        ValidateMode::Order => {
            let set = set
                .as_ref()
                .ok_or_else(|| CliError::input("usage", "--artifact is required in order mode"))?;
            let sample_size = pick(a.sample_size, config.sample_size, DEFAULT_SAMPLE_SIZE);
            manifest.param("sample_size", sample_size);
            let report = order_validation(&spec, set, &scenario, samples, sample_size, seed, exec)?;
            let rows: Vec<OrderCsvRow> = report
                .rows
                .iter()
                .map(|r| OrderCsvRow {
                    id: &r.id,
                    est_accuracy: r.estimate.accuracy,
                    meas_accuracy: r.measured.accuracy,
                    est_latency_s: r.estimate.latency,
                    meas_latency_s: r.measured.latency,
                })
                .collect();
            let summary = json!({
                "mode": "order",
                "sampled": report.rows.len(),
                "accuracy": {
                    "spearman": metric_json(&report.accuracy.spearman),
                    "pairwise_agreement": report.accuracy.pairwise_agreement,
                    "calibrated_mae": metric_json(&report.accuracy.calibrated_mae),
                },
                "latency": {
                    "spearman": metric_json(&report.latency.spearman),
                    "pairwise_agreement": report.latency.pairwise_agreement,
                    "calibrated_mae": metric_json(&report.latency.calibrated_mae),
                },
            });
            (to_csv("order-validation", &[], &rows)?, summary)
        }
    };
    manifest.param("summary", &summary);
    match &a.out {
        Some(path) => emit(Some(path), &text, manifest, started)?,
        None => stdout(&text),
    }
    let rendered = serde_json::to_string_pretty(&summary).expect("json");
    if a.out.is_some() {
        stdout(&format!("{rendered}\n"));
    } else {
        eprintln!("{rendered}");
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportCsvRow<'a> {
    source: String,
    id: &'a str,
    est_accuracy: f64,
    est_latency_s: f64,
    meas_accuracy: Option<f64>,
    meas_latency_s: Option<f64>,
    est_frontier: bool,
    meas_frontier: Option<bool>,
}

fn frontier_flags(points: Vec<FrontierPoint>) -> Result<BTreeSet<String>, CliError> {
    let kept = nondominated_sort_2d(&points, 0.0)?;
    Ok(kept.into_iter().map(|i| points[i].id.clone()).collect())
}

fn report(a: &ReportArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let sets = a
        .artifacts
        .iter()
        .map(|p| load_set(p))
        .collect::<Result<Vec<_>, _>>()?;
    let measured = a
        .measured
        .as_deref()
        .map(read_measurements)
        .transpose()?
        .unwrap_or_default();
    let known: BTreeSet<&str> = sets
        .iter()
        .flat_map(|s| s.entries.iter().map(|e| e.config.id.as_str()))
        .collect();
    if let Some(id) = measured.keys().find(|id| !known.contains(id.as_str())) {
        return Err(CliError::input(
            "mismatched_ids",
            format!("measured configuration `{id}` appears in no artifact"),
        ));
    }
    let mut rows = Vec::new();
    for (path, set) in a.artifacts.iter().zip(&sets) {
        let source = path.display().to_string();
        let est = frontier_flags(
            set.entries
                .iter()
                .map(|e| {
                    FrontierPoint::new(e.estimate.accuracy, e.estimate.latency, e.config.id.clone())
                })
                .collect(),
        )?;
        let meas = frontier_flags(
            set.entries
                .iter()
                .filter_map(|e| measured.get(&e.config.id))
                .map(|p| FrontierPoint::new(p.accuracy, p.latency, p.id.clone()))
                .collect(),
        )?;
        for e in &set.entries {
            let m = measured.get(&e.config.id);
            rows.push(ReportCsvRow {
                source: source.clone(),
                id: &e.config.id,
                est_accuracy: e.estimate.accuracy,
                est_latency_s: e.estimate.latency,
                meas_accuracy: m.map(|p| p.accuracy),
                meas_latency_s: m.map(|p| p.latency),
                est_frontier: est.contains(&e.config.id),
                meas_frontier: m.map(|p| meas.contains(&p.id)),
            });
        }
    }
    let text = to_csv("report", &[], &rows)?;
    let mut manifest = RunManifest::new("report");
    for p in &a.artifacts {
        manifest.input(p)?;
    }
    if let Some(m) = &a.measured {
        manifest.input(m)?;
    }
    emit(a.out.as_deref(), &text, manifest, started)
}
