//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p wfc-cli --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wfc_core::explorer::{
    count_configurations, explore, load_compiled_set, nondominated_sort_2d, save_compiled_set,
    ExploreOptions, Restriction, SearchSpace,
};
use wfc_core::metrics::{
    calibrated_mae, hypervolume_2d, pairwise_agreement, spearman, MetricsError, PairedSeries,
};
use wfc_core::profile::load_profiles;
use wfc_core::proxy::{estimate, CompiledGraph};
use wfc_core::selector::{default_alpha_grid, evaluate_heterogeneous, sweep_fixed, UtilityContext};
use wfc_core::simulator::{
    brute_force_frontier, order_validation, BruteForceOptions, LatencyModel, TruthScenario,
};
use wfc_core::testkit::{random_desk_instance, random_graph, random_leaf_stats, random_points};
use wfc_core::workflow::{enumerate_structures, parse_workflow_spec};
use wfc_core::{CompiledSet, ExecutionModel, ProfileTable, RoleAssignment, RoleId, WorkflowSpec};

const MODELS: [ExecutionModel; 2] = [ExecutionModel::SequentialEdge, ExecutionModel::CriticalPath];
const SIM_SEED: u64 = 20_240_611;
const N_QUERIES: u64 = 20_000;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn fixture(name: &str) -> (WorkflowSpec, ProfileTable) {
    (
        parse_workflow_spec(&read(&format!("{name}.workflow.json"))).unwrap(),
        load_profiles(&read(&format!("{name}.profiles.json"))).unwrap(),
    )
}

fn restriction(name: &str) -> Restriction {
    Restriction::from_json(&read(&format!("{name}.restricted.json"))).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bits(a: f64, l: f64) -> (u64, u64) {
    (a.to_bits(), l.to_bits())
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for instance in 0..120 {
        let n = rng.random_range(1..=500);
        let points = random_points(&mut rng, n);
        let kept = nondominated_sort_2d(&points, 0.0).map_err(|e| e.to_string())?;
        let got: Vec<(u64, u64)> = kept
            .iter()
            .map(|&i| bits(points[i].accuracy, points[i].latency))
            .collect();
        let got_set: BTreeSet<(u64, u64)> = got.iter().copied().collect();
        let oracle: BTreeSet<(u64, u64)> = points
            .iter()
            .filter(|p| {
                !points.iter().any(|q| {
                    q.accuracy >= p.accuracy
                        && q.latency <= p.latency
                        && (q.accuracy > p.accuracy || q.latency < p.latency)
                })
            })
            .map(|p| bits(p.accuracy, p.latency))
            .collect();
        if got_set != oracle || got.len() != got_set.len() {
            return Err(format!(
                "instance {instance} (n = {n}) differs from the dominance oracle"
            ));
        }
    }
    let t = start.elapsed();
    check(
        t < Duration::from_secs(5),
        format!("120 instances up to 500 points, {t:.2?}"),
    )
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut largest = 0u64;
    for instance in 0..60 {
        let (spec, table) = random_desk_instance(&mut rng);
        let mut pairs = |prune: bool| -> Result<BTreeSet<(u64, u64)>, String> {
            let options = ExploreOptions {
                prune,
                ..ExploreOptions::default()
            };
            let set = explore(&spec, &table, &options).map_err(|e| e.to_string())?;
            largest = largest.max(set.metadata.explored_count);
            Ok(set
                .entries
                .iter()
                .map(|e| bits(e.estimate.accuracy, e.estimate.latency))
                .collect())
        };
        let (pruned, full) = (pairs(true)?, pairs(false)?);
        if pruned != full {
            return Err(format!(
                "instance {instance}: pruned frontier differs from the full-space frontier"
            ));
        }
    }
    let t = start.elapsed();
    check(
        t < Duration::from_secs(30),
        format!("60 random workflows, largest space {largest}, {t:.2?}"),
    )
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checks = 0;
    for graph_no in 0..250 {
        let n = rng.random_range(1..=8);
        let graph = CompiledGraph::new(&random_graph(&mut rng, n)).map_err(|e| e.to_string())?;
        let leaves = random_leaf_stats(&mut rng, n);
        for slot in 0..n {
            let mut better = leaves.clone();
            better[slot].accuracy = rng.random_range(leaves[slot].accuracy..=1.0);
            better[slot].latency = rng.random_range(0.0..=leaves[slot].latency);
            for exec in MODELS {
                let (a, b) = (graph.evaluate(&leaves, exec), graph.evaluate(&better, exec));
                if b.accuracy < a.accuracy || b.latency > a.latency {
                    return Err(format!(
                        "graph {graph_no}, slot {slot}, {exec}: {a:?} -> {b:?}"
                    ));
                }
                checks += 1;
            }
        }
    }
    Ok(format!(
        "250 graphs, {checks} single-leaf improvements, both execution models"
    ))
}

fn ac4() -> Outcome {
    let (spec, table) = fixture("livecodebench");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut by_retries = BTreeMap::new();
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    };
    for variant in enumerate_structures(&spec).variants {
        let on = |c: &str| variant.assignment.is_on(&c.into());
        let retries = (1..=3).filter(|i| on(&format!("retry_{i}"))).count();
        *by_retries.entry(retries).or_insert(0) += 1;
        for _ in 0..25 {
            let mut assignment = RoleAssignment::new();
            let mut stats = BTreeMap::new();
            for role in &variant.active_roles {
                let options: Vec<_> = table.role_profiles(role).collect();
                let p = options[rng.random_range(0..options.len())];
                assignment.insert(role.clone(), p.config.clone());
                stats.insert(role.as_str().to_owned(), (p.accuracy, p.latency));
            }
            let programmers: Vec<(f64, f64)> = (1..=3)
                .filter(|i| on(&format!("prog_{i}")))
                .map(|i| stats[&format!("programmer_{i}")])
                .collect();
            let ensemble = on("ensemble").then(|| stats["self_ensemble"]);
            let fixes: Vec<(f64, f64)> =
                (1..=retries).map(|i| stats[&format!("fix#{i}")]).collect();
            for exec in MODELS {
                let miss: f64 = programmers.iter().map(|(p, _)| 1.0 - p).product();
                let mut p0 = 1.0 - miss;
                let mut l0 = match exec {
                    ExecutionModel::SequentialEdge => programmers.iter().map(|(_, l)| l).sum(),
                    ExecutionModel::CriticalPath => {
                        programmers.iter().map(|(_, l)| *l).fold(0.0, f64::max)
                    }
                };
                if let Some((pe, le)) = ensemble {
                    p0 *= pe;
                    l0 += le;
                }
                let mut fail = 1.0 - p0;
                let mut latency = l0;
                for (pf, lf) in &fixes {
                    latency += fail * lf;
                    fail *= 1.0 - pf;
                }
                let accuracy = 1.0 - fail;
                let got = estimate(&spec, &variant.assignment, &assignment, &table, exec)
                    .map_err(|e| e.to_string())?;
                worst = worst
                    .max(rel(got.accuracy, accuracy))
                    .max(rel(got.latency, latency));
            }
        }
    }
    let covered: Vec<usize> = by_retries.keys().copied().collect();
    check(
        worst <= 1e-12 && covered == vec![0, 1, 2, 3],
        format!("retry counts {covered:?}, worst relative difference {worst:.1e}"),
    )
}

fn ac5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, expected) in [("hotpotqa", 252), ("livecodebench", 80)] {
        let start = Instant::now();
        let (spec, table) = fixture(name);
        let scenario =
            TruthScenario::matching(&table, LatencyModel::Deterministic, 0.0, 0.0, SIM_SEED)
                .unwrap();
        let options = BruteForceOptions {
            n_samples: N_QUERIES,
            ..BruteForceOptions::default()
        };
        let result = brute_force_frontier(&spec, &table, &scenario, &restriction(name), &options)
            .map_err(|e| e.to_string())?;
        let c = result.consistency().map_err(|e| e.to_string())?;
        let t = start.elapsed();
        ok &= result.rows.len() == expected && c.ratio >= 0.95 && t < Duration::from_secs(600);
        lines.push(format!(
            "{name}: {} configs, hypervolume ratio {:.4}, {t:.1?}",
            result.rows.len(),
            c.ratio
        ));
    }
    check(ok, lines.join("; "))
}

fn compiled(name: &str) -> (WorkflowSpec, ProfileTable, CompiledSet) {
    let (spec, table) = fixture(name);
    let set = explore(&spec, &table, &ExploreOptions::default()).unwrap();
    (spec, table, set)
}

/// Order metrics of 20 seeded compiled entries measured under the matched scenario.
fn order_metrics(name: &str) -> Result<(f64, f64, f64), String> {
    let (spec, table, set) = compiled(name);
    let scenario =
        TruthScenario::matching(&table, LatencyModel::Deterministic, 0.0, 0.0, SIM_SEED).unwrap();
    let report = order_validation(
        &spec,
        &set,
        &scenario,
        N_QUERIES,
        20,
        SIM_SEED,
        ExecutionModel::SequentialEdge,
    )
    .map_err(|e| e.to_string())?;
    if report.rows.len() != 20 {
        return Err(format!("{name}: sampled {} entries", report.rows.len()));
    }
    let value = |r: &Result<f64, MetricsError>| r.clone().unwrap_or(f64::NAN);
    Ok((
        value(&report.accuracy.spearman),
        value(&report.latency.spearman),
        value(&report.latency.calibrated_mae),
    ))
}

fn ac6() -> Outcome {
    let (sa, sl, cl) = order_metrics("hotpotqa")?;
    let mut detail = format!(
        "hotpotqa: accuracy Spearman {sa:.4}, latency Spearman {sl:.4}, latency cMAE {cl:.1e}"
    );
    // Diagnostics only: math packs its top entries closer than the binomial
    // error, and livecodebench's conditional stages make latency stochastic.
    for name in ["math", "livecodebench"] {
        let (a, l, c) = order_metrics(name)?;
        detail.push_str(&format!(" [{name}, not gated: {a:.4} / {l:.4} / {c:.1e}]"));
    }
    check(sa >= 0.90 && sl >= 0.95 && cl <= 1e-6, detail)
}

fn ac7() -> Outcome {
    let series = |e: &[f64], m: &[f64]| PairedSeries::new(e.to_vec(), m.to_vec()).unwrap();
    let e = [0.3, 0.1, 0.7, 0.2, 0.9, 0.5];
    let monotone: Vec<f64> = e.iter().map(|x: &f64| x.powi(3) * 4.0 + x.exp()).collect();
    let affine: Vec<f64> = e.iter().map(|x| 3.0 * x - 2.0).collect();
    let l = 12.0;
    let rectangle = hypervolume_2d(&[(1.0, 0.0)], (0.0, l)).unwrap();
    let staircase = hypervolume_2d(&[(0.5, 0.2 * l), (0.8, 0.6 * l)], (0.0, l)).unwrap();
    let results = [
        (
            "monotone Spearman",
            spearman(&series(&e, &monotone)).unwrap() == 1.0,
        ),
        (
            "PA 5/6",
            (pairwise_agreement(&series(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0])) - 5.0 / 6.0)
                .abs()
                < 1e-15,
        ),
        (
            "affine cMAE",
            calibrated_mae(&series(&e, &affine)).unwrap() < 1e-12,
        ),
        (
            "degenerate anchors",
            calibrated_mae(&series(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]))
                == Err(MetricsError::DegenerateAnchors),
        ),
        (
            "hypervolume rectangles",
            (rectangle - l).abs() <= 1e-12 && (staircase - 0.52 * l).abs() <= 1e-12,
        ),
    ];
    let failed: Vec<&str> = results
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    check(
        failed.is_empty(),
        format!("{} cases, failed: {failed:?}", results.len()),
    )
}

fn ac8() -> Outcome {
    let mut notes = Vec::new();
    for name in ["math", "hotpotqa", "livecodebench"] {
        let (_, _, set) = compiled(name);
        let ctx = UtilityContext::from_set(&set).map_err(|e| e.to_string())?;
        let rows = sweep_fixed(&set, ctx, &default_alpha_grid()).map_err(|e| e.to_string())?;
        let picked: Vec<_> = rows
            .iter()
            .map(|r| set.get(&r.selected_id).unwrap().estimate)
            .collect();
        if rows.len() != 19
            || picked
                .windows(2)
                .any(|w| w[1].accuracy < w[0].accuracy || w[1].latency < w[0].latency)
        {
            return Err(format!(
                "{name}: sweep is not monotone over the 19-point grid"
            ));
        }
        let measured: BTreeMap<String, (f64, f64)> = set
            .entries
            .iter()
            .map(|e| {
                (
                    e.config.id.clone(),
                    (e.estimate.accuracy, e.estimate.latency),
                )
            })
            .collect();
        let a =
            evaluate_heterogeneous(&set, ctx, &measured, 500, 10, 99).map_err(|e| e.to_string())?;
        let b =
            evaluate_heterogeneous(&set, ctx, &measured, 500, 10, 99).map_err(|e| e.to_string())?;
        if a.mean.to_bits() != b.mean.to_bits() || a.std.to_bits() != b.std.to_bits() {
            return Err(format!(
                "{name}: heterogeneous evaluation is not reproducible"
            ));
        }
        notes.push(format!(
            "{name} {} distinct picks",
            picked
                .iter()
                .map(|e| e.latency.to_bits())
                .collect::<BTreeSet<_>>()
                .len()
        ));
    }

    let (_, _, mut single) = compiled("hotpotqa");
    single.entries.truncate(1);
    let e = single.entries[0].estimate;
    let ctx = UtilityContext::new(2.0 * e.latency).unwrap();
    let les = 0.5;
    let measured = BTreeMap::from([(single.entries[0].config.id.clone(), (e.accuracy, e.latency))]);
    let (n, reps) = (5000usize, 10usize);
    let r =
        evaluate_heterogeneous(&single, ctx, &measured, n, reps, 7).map_err(|e| e.to_string())?;
    let analytic = 0.5 * e.accuracy + 0.5 * les;
    let se = (e.accuracy - les).abs() / (12.0 * (n * reps) as f64).sqrt();
    let z = (r.mean - analytic).abs() / se;
    check(
        z <= 3.0,
        format!(
            "sweeps monotone ({}), reproducible, singleton deviation {z:.2} standard errors",
            notes.join(", ")
        ),
    )
}

fn ac9() -> Outcome {
    let roles: Vec<String> = (0..5).map(|i| format!("agent_{i}")).collect();
    let doc = format!(
        r#"{{"name": "five-agents", "roles": [{}], "graph": {{"kind": "seq", "children": [{}]}}}}"#,
        roles
            .iter()
            .map(|r| format!(r#"{{"id": "{r}", "config_space": {{"models": ["a", "b", "c", "d", "e"], "budgets": [64, 256, 1024, 4096]}}}}"#))
            .collect::<Vec<_>>()
            .join(", "),
        roles
            .iter()
            .map(|r| format!(r#"{{"kind": "leaf", "role": "{r}"}}"#))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let spec = parse_workflow_spec(&doc).unwrap();
    let counts: BTreeMap<RoleId, u64> =
        roles.iter().map(|r| (RoleId::new(r.clone()), 20)).collect();
    let total = count_configurations(&spec, &counts).map_err(|e| e.to_string())?;
    let mut lines = vec![format!("example space {total}")];
    let mut ok = total.to_string() == "3200000";
    for name in ["hotpotqa", "livecodebench"] {
        let (spec, _) = fixture(name);
        let space =
            SearchSpace::restricted(&spec, &restriction(name)).map_err(|e| e.to_string())?;
        let materialized: BTreeSet<String> = space.configurations().map(|c| c.id).collect();
        ok &= space.size().to_string() == materialized.len().to_string();
        lines.push(format!(
            "{name} restricted {} = {} materialized",
            space.size(),
            materialized.len()
        ));
    }
    check(ok, lines.join("; "))
}

fn run_cli(args: &[&str]) -> i32 {
    wfc_cli::run(std::iter::once("wfc").chain(args.iter().copied()))
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = fixtures().join("hotpotqa.workflow.json");
    let profiles = fixtures().join("hotpotqa.profiles.json");
    let mut outputs = Vec::new();
    for (i, workers) in [None, Some("1"), Some("3"), None].into_iter().enumerate() {
        let out = dir.path().join(format!("set{i}.json"));
        let mut args = vec![
            "compile",
            "--spec",
            spec.to_str().unwrap(),
            "--profiles",
            profiles.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ];
        if let Some(w) = workers {
            args.extend(["--workers", w]);
        }
        if run_cli(&args) != 0 {
            return Err("compile failed".into());
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    if outputs.windows(2).any(|w| w[0] != w[1]) {
        return Err("artifacts differ across runs or worker counts".into());
    }

    let path = dir.path().join("set0.json");
    let set = load_compiled_set(&path).map_err(|e| e.to_string())?;
    let copy = dir.path().join("copy.json");
    save_compiled_set(&set, &copy).map_err(|e| e.to_string())?;
    if std::fs::read(&copy).unwrap() != outputs[0] || load_compiled_set(&copy).unwrap() != set {
        return Err("save/load does not round-trip".into());
    }

    let text = String::from_utf8(outputs[0].clone()).unwrap();
    let first = &set.entries[0];
    let tampered = [
        text.replacen(&format!("{}", first.estimate.accuracy), "0.999999", 1),
        text.replacen(&first.config.id, "0|x=y@1", 1),
        text.replacen("\"format_version\": 1", "\"format_version\": 9", 1),
    ];
    let mut rejected = 0;
    for (i, t) in tampered.iter().enumerate() {
        assert_ne!(t, &text, "tamper case {i} changed nothing");
        let p = dir.path().join(format!("tampered{i}.json"));
        std::fs::write(&p, t).unwrap();
        if load_compiled_set(&p).is_err()
            && run_cli(&[
                "select",
                "--artifact",
                p.to_str().unwrap(),
                "--budget",
                "1e9",
            ]) == 2
        {
            rejected += 1;
        }
    }
    check(
        rejected == tampered.len(),
        format!("4 compiles byte-identical ({} bytes), round-trip exact, {rejected}/{} tampered artifacts rejected", outputs[0].len(), tampered.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1 frontier construction matches dominance oracle", ac1),
        ("AC2 pruning preserves the frontier", ac2),
        ("AC3 proxy monotonicity", ac3),
        ("AC4 closed-form repair loop", ac4),
        ("AC5 frontier consistency against simulator", ac5),
        ("AC6 local order preservation", ac6),
        ("AC7 metric unit suite", ac7),
        ("AC8 selection protocol", ac8),
        ("AC9 configuration counting", ac9),
        ("AC10 determinism and artifact round-trip", ac10),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of 10 acceptance criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
