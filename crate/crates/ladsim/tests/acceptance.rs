//! Acceptance run: every criterion prints one PASS/FAIL line; the process
//! fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;

use ladsim::algo_multi::meeting::{meeting_rounds, MeetPolicy};
use ladsim::algo_rooted::audit::run_audited;
use ladsim::algo_rooted::RootedPolicy;
use ladsim::cli::config::Config;
use ladsim::cli::experiment::{run_config, ExperimentError, Report};
use ladsim::engine::run_observed;
use ladsim::graph::{generate, GenKind, GenParams, NodeIx, PortLabeledGraph, RobotId, RobotSpec};
use ladsim::verify::{baseline, check_lad, log2g, BoundFamily, REGRESSION_SLACK};
use rayon::prelude::*;

/// Multiplier on n for the port-rotation walk's round bound.
const TPR_ROUNDS_PER_NODE: f64 = 8.0;
/// Multiplier on log2(k + max degree) for its memory bound.
const TPR_BITS_PER_LOG: f64 = 8.0;
/// Multiplier on m for the rooted k = n DFS.
const DFS_ROUNDS_PER_EDGE: f64 = 8.0;
/// Fraction of min(n^2/k, m) that every lower-bound run must reach.
const LOWER_BOUND_FRACTION: f64 = 0.1;
const MEETING_MAX_ID: u32 = 256;

type Outcome = Result<String, String>;

fn cfg(text: &str) -> Config {
    Config::parse(text).unwrap_or_else(|e| panic!("bad config {text:?}: {e}"))
}

/// Placement check written independently of the library predicate.
fn placement_ok(g: &PortLabeledGraph, robots: &[RobotSpec], at: &BTreeMap<RobotId, NodeIx>) -> bool {
    let mut used = BTreeSet::new();
    robots.iter().all(|r| match at.get(&r.id) {
        Some(&v) => v < g.node_count() && g.color(v) == r.color && used.insert(v),
        None => false,
    })
}

fn run_all(configs: &[String]) -> Vec<(String, Result<Report, ExperimentError>)> {
    configs.par_iter().map(|t| (t.replace('\n', " "), run_config(&cfg(t)))).collect()
}

fn solved(r: &Report) -> bool {
    let lib = check_lad(&r.instance.graph, &r.instance.robots, &r.placement).is_solved();
    let own = placement_ok(&r.instance.graph, &r.instance.robots, &r.placement);
    lib && own
}

fn sparse_kinds() -> [&'static str; 3] {
    ["path", "ring", "tree"]
}

fn tpr_configs() -> Vec<String> {
    let mut v = Vec::new();
    for kind in sparse_kinds() {
        for n in [10, 50, 100, 200] {
            for k in [2, n / 2] {
                for seed in 0..5 {
                    v.push(format!("algorithm = tpr\ngraph = {kind}\nn = {n}\nk = {k}\ncolors = 3\nseed = {seed}\n"));
                }
            }
        }
    }
    v
}

fn dfs_configs() -> Vec<String> {
    let mut v = Vec::new();
    for kind in sparse_kinds() {
        for n in [10, 50] {
            for seed in 0..3 {
                v.push(format!("algorithm = rooted_kn\ngraph = {kind}\nn = {n}\nk = {n}\ncolors = 3\nseed = {seed}\n"));
            }
        }
    }
    for n in [12, 30, 60] {
        for seed in 0..3 {
            let m = 3 * n / 2;
            v.push(format!("algorithm = rooted_kn\ngraph = random_connected\nn = {n}\nm = {m}\nk = {n}\ncolors = 3\nseed = {seed}\n"));
        }
    }
    v
}

fn rooted_known_configs() -> Vec<String> {
    let mut v = Vec::new();
    for kind in sparse_kinds() {
        for n in [50, 200] {
            for seed in 0..3 {
                let k = n / 10;
                v.push(format!("algorithm = rooted\ngraph = {kind}\nn = {n}\nk = {k}\ncolors = 3\nseed = {seed}\n"));
            }
        }
    }
    for n in [12, 24, 40, 60] {
        for k in [3, 8] {
            for seed in 0..4 {
                let m = 3 * n / 2;
                v.push(format!("algorithm = rooted\ngraph = random_connected\nn = {n}\nm = {m}\nk = {k}\ncolors = 3\nseed = {seed}\n"));
            }
        }
    }
    v
}

fn rooted_unknown_configs() -> Vec<String> {
    let mut v = Vec::new();
    for n in [12, 24, 40, 60] {
        for k in [2, 3, 5, 8] {
            for seed in 0..2 {
                let m = 3 * n / 2;
                v.push(format!(
                    "algorithm = rooted\nn_known = false\ngraph = random_connected\nn = {n}\nm = {m}\nk = {k}\ncolors = 3\nseed = {seed}\n"
                ));
            }
        }
    }
    v
}

fn other_configs() -> Vec<String> {
    let mut v = Vec::new();
    for n in [8, 16, 24] {
        for seed in 0..3 {
            let m = 3 * n / 2;
            v.push(format!("algorithm = general\ngraph = random_connected\nn = {n}\nm = {m}\nk = 4\nstart = nodes:0,0,3,5\ncolors = 2\nseed = {seed}\n"));
        }
    }
    for n in [6, 10, 16] {
        for seed in 0..3 {
            let m = 3 * n / 2;
            v.push(format!("algorithm = dispersed_kn\ngraph = random_connected\nn = {n}\nm = {m}\nk = {n}\nstart = dispersed\ncolors = 2\nseed = {seed}\n"));
        }
    }
    for n in [12, 30, 60] {
        for seed in 0..3 {
            let m = 3 * n / 2;
            v.push(format!("algorithm = gather\ngraph = random_connected\nn = {n}\nm = {m}\nk = 4\nstart = nodes:1,5,7,11\ncolors = 3\nseed = {seed}\n"));
        }
    }
    v
}

fn lower_bound_grid() -> Vec<(usize, usize)> {
    vec![(20, 5), (40, 5), (60, 5), (30, 6), (60, 6), (20, 10), (40, 10), (60, 10)]
}

fn lower_bound_configs() -> Vec<String> {
    let mut v = Vec::new();
    for (n, k) in lower_bound_grid() {
        let colors: Vec<String> = (0..k).map(|i| if i + 1 == k { "2" } else { "1" }.to_string()).collect();
        for known in [true, false] {
            v.push(format!(
                "algorithm = rooted\ngraph = lower_bound\nn = {n}\nk = {k}\nrobot_colors = {}\nn_known = {known}\n",
                colors.join(",")
            ));
        }
    }
    v
}

struct Runs {
    tpr: Vec<(String, Result<Report, ExperimentError>)>,
    dfs: Vec<(String, Result<Report, ExperimentError>)>,
    known: Vec<(String, Result<Report, ExperimentError>)>,
    unknown: Vec<(String, Result<Report, ExperimentError>)>,
    other: Vec<(String, Result<Report, ExperimentError>)>,
    lower: Vec<(String, Result<Report, ExperimentError>)>,
}

fn ok_reports(runs: &[(String, Result<Report, ExperimentError>)]) -> Result<Vec<&Report>, String> {
    runs.iter()
        .map(|(c, r)| match r {
            Ok(r) if solved(r) => Ok(r),
            Ok(r) => Err(format!("unsolved: {c} ({})", r.verdict)),
            Err(e) => Err(format!("error: {c} ({e})")),
        })
        .collect()
}

fn c1_correctness(runs: &Runs) -> Outcome {
    let all: Vec<_> = [&runs.tpr, &runs.dfs, &runs.known, &runs.unknown, &runs.other, &runs.lower]
        .into_iter()
        .flat_map(|v| v.iter())
        .collect();
    let mut per_alg: BTreeMap<&str, usize> = BTreeMap::new();
    for (c, r) in &all {
        match r {
            Ok(r) if solved(r) => *per_alg.entry(r.config.algorithm.name()).or_default() += 1,
            Ok(r) => return Err(format!("unsolved: {c} ({})", r.verdict)),
            Err(e) => return Err(format!("error: {c} ({e})")),
        }
    }
    if all.len() < 200 {
        return Err(format!("only {} instances", all.len()));
    }
    Ok(format!("{} instances solved, per pipeline {per_alg:?}", all.len()))
}

fn c2_tpr(runs: &Runs) -> Outcome {
    let (mut worst_r, mut worst_b) = (0.0f64, 0.0f64);
    for r in ok_reports(&runs.tpr)? {
        let rounds = r.stats.rounds as f64 / r.params.n as f64;
        let bits = r.stats.max_bits() as f64 / log2g((r.params.k + r.params.max_degree) as f64);
        worst_r = worst_r.max(rounds);
        worst_b = worst_b.max(bits);
        if rounds > TPR_ROUNDS_PER_NODE || bits > TPR_BITS_PER_LOG {
            return Err(format!("{}: rounds/n {rounds:.2}, bits/log2(k+D) {bits:.2}", r.summary()));
        }
    }
    Ok(format!(
        "{} runs, worst rounds/n {worst_r:.2} <= {TPR_ROUNDS_PER_NODE}, worst bits/log2(k+D) {worst_b:.2} <= {TPR_BITS_PER_LOG}",
        runs.tpr.len()
    ))
}

fn c3_dfs(runs: &Runs) -> Outcome {
    let (mut worst_r, mut worst_b) = (0.0f64, 0.0f64);
    for r in ok_reports(&runs.dfs)? {
        let rounds = r.stats.rounds as f64 / r.params.m as f64;
        worst_r = worst_r.max(rounds);
        // Settled robots keep one child bit per port, so memory grows with
        // the degree; reported, not bounded.
        worst_b = worst_b.max(r.stats.max_bits() as f64 / (r.params.max_degree as f64 + log2g(r.params.k as f64)));
        if rounds > DFS_ROUNDS_PER_EDGE {
            return Err(format!("{}: rounds/m {rounds:.2}", r.summary()));
        }
    }
    Ok(format!(
        "{} runs, worst rounds/m {worst_r:.2} <= {DFS_ROUNDS_PER_EDGE}; memory up to {worst_b:.2} x (D + log2 k) bits from the per-port child bitmask",
        runs.dfs.len()
    ))
}

fn constants(reports: &[&Report]) -> (f64, f64) {
    reports.iter().fold((0.0f64, 0.0f64), |(r, b), x| (r.max(x.bound.round_ratio), b.max(x.bound.bits_ratio)))
}

fn against_baseline(fam: BoundFamily, reports: &[&Report]) -> Outcome {
    let (r, b) = constants(reports);
    let (br, bb) = baseline(fam);
    let line = format!(
        "{} runs, round constant {r:.2} (baseline {br}, limit {:.2}), bits constant {b:.2} (baseline {bb}, limit {:.2})",
        reports.len(),
        br * REGRESSION_SLACK,
        bb * REGRESSION_SLACK
    );
    if r <= br * REGRESSION_SLACK && b <= bb * REGRESSION_SLACK {
        Ok(line)
    } else {
        Err(line)
    }
}

fn c4_rooted_known(runs: &Runs) -> Outcome {
    let reports = ok_reports(&runs.known)?;
    if reports.iter().any(|r| r.bound.family != BoundFamily::RootedKnown) {
        return Err("a known-n run was checked against another family".into());
    }
    against_baseline(BoundFamily::RootedKnown, &reports)
}

/// Attempts = restarts + 1; every robot logs one `restart` event per doubling.
fn iterations(r: &Report) -> u64 {
    let restarts = r.trace.events.iter().filter(|e| e.detail.starts_with("restart")).count() as u64;
    restarts / r.params.k as u64 + 1
}

fn expected_iterations(n: usize, k: usize) -> u64 {
    // ceil(log2(max(n/k, 1))) + 1, computed on integers.
    let q = n.div_ceil(k).max(1) as u64;
    let mut bits = 0;
    while (1u64 << bits) < q {
        bits += 1;
    }
    bits + 1
}

fn c5_unknown_n(runs: &Runs) -> Outcome {
    let reports = ok_reports(&runs.unknown)?;
    for r in &reports {
        let (got, want) = (iterations(r), expected_iterations(r.params.n, r.params.k));
        if got != want {
            return Err(format!(
                "n={} k={} seed={}: {got} iterations, expected {want}",
                r.params.n, r.params.k, r.config.seed
            ));
        }
    }
    let line = against_baseline(BoundFamily::RootedUnknown, &reports)?;
    Ok(format!("iteration counts exact; {line}"))
}

fn c6_meeting() -> Outcome {
    let g = PortLabeledGraph::build_from_edge_list(2, &[(0, 1)], &[1, 1]).map_err(|e| e.to_string())?;
    let p = MeetPolicy::new(MEETING_MAX_ID);
    let limit = meeting_rounds(MEETING_MAX_ID);
    let pairs: Vec<(u32, u32)> =
        (1..=MEETING_MAX_ID).flat_map(|a| (a + 1..=MEETING_MAX_ID).map(move |b| (a, b))).collect();
    let worst = pairs
        .par_iter()
        .map(|&(a, b)| {
            let robots = [RobotSpec::new(a, 1), RobotSpec::new(b, 1)];
            let start = BTreeMap::from([(a, 0), (b, 1)]);
            let mut met = None;
            run_observed(&p, &g, &start, &robots, 4 * limit, &mut |c| {
                if met.is_none() && c.placement[0] == c.placement[1] {
                    met = Some(c.round);
                }
            })
            .map_err(|e| format!("{a},{b}: {e}"))?;
            match met {
                Some(r) if r <= limit => Ok(r),
                Some(r) => Err(format!("{a},{b} met in round {r} > {limit}")),
                None => Err(format!("{a},{b} never met")),
            }
        })
        .collect::<Result<Vec<u64>, String>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    Ok(format!("{} pairs, all met, slowest in {worst} rounds <= 4*ceil(log2 {MEETING_MAX_ID}) = {limit}", pairs.len()))
}

const PHASE1_CHECKS: [&str; 7] =
    ["group_tree", "group_size", "tour_length", "source_count", "partition", "supertree", "source_robots"];
const PHASE3_CHECKS: [&str; 3] = ["assignment", "stage1_occupancy", "exact_placement"];

struct Audit {
    tallies: BTreeMap<&'static str, (u64, Vec<String>)>,
    runs: usize,
    over_half: usize,
}

fn audit_runs() -> Result<Audit, String> {
    let mut cases = Vec::new();
    for n in [12, 24, 40, 60] {
        for k in [2, 4, 8] {
            for seed in 0..2u64 {
                for known in [true, false] {
                    cases.push(("random_connected", n, k, seed, known));
                }
            }
        }
    }
    for kind in sparse_kinds() {
        cases.push((kind, 40, 4, 0, true));
        cases.push((kind, 40, 4, 0, false));
    }
    let reports = cases
        .par_iter()
        .map(|&(kind, n, k, seed, known)| {
            let kind = GenKind::parse(kind).expect("generator");
            let g = generate(kind, &GenParams::n(n).colors(3).edges(3 * n / 2), seed).map_err(|e| e.to_string())?;
            let robots = RobotSpec::sample_feasible(&g, k, seed);
            let p = if known { RootedPolicy::known(n) } else { RootedPolicy::unknown() };
            let (out, rep) =
                run_audited(&p, &g, &robots, 0, 50_000_000).map_err(|e| format!("{kind:?} n={n} k={k}: {e}"))?;
            if !out.stats.solved {
                return Err(format!("{kind:?} n={n} k={k} seed={seed}: unsolved"));
            }
            Ok(rep)
        })
        .collect::<Result<Vec<_>, String>>()?;
    let mut a = Audit { tallies: BTreeMap::new(), runs: reports.len(), over_half: 0 };
    for rep in reports {
        for (name, t) in rep.checks {
            let e = a.tallies.entry(name).or_default();
            e.0 += t.checked;
            e.1.extend(t.violations);
        }
        a.over_half += rep.group_counts.iter().filter(|(b, k)| 2 * b > *k).count();
    }
    Ok(a)
}

fn audit_line(a: &Audit, names: &[&str]) -> Outcome {
    let mut parts = Vec::new();
    for name in names {
        let (checked, bad) = a.tallies.get(name).cloned().unwrap_or_default();
        if checked == 0 {
            return Err(format!("{name} never checked"));
        }
        if let Some(v) = bad.first() {
            return Err(format!("{name}: {} violation(s), first {v}", bad.len()));
        }
        parts.push(format!("{name} {checked}"));
    }
    Ok(format!("{} audited runs, zero violations ({})", a.runs, parts.join(", ")))
}

fn c9_lower_bound(runs: &Runs) -> Outcome {
    let mut tightest = f64::MAX;
    for r in ok_reports(&runs.lower)? {
        let (n, k, m) = (r.params.n as f64, r.params.k as f64, r.params.m as f64);
        let floor = LOWER_BOUND_FRACTION * (n * n / k).min(m);
        tightest = tightest.min(r.stats.rounds as f64 / floor);
        if (r.stats.rounds as f64) < floor {
            return Err(format!("n={n} k={k}: {} rounds < {floor:.1}", r.stats.rounds));
        }
    }
    Ok(format!(
        "{} runs over {} (n,k) cells, rounds >= {LOWER_BOUND_FRACTION} min(n^2/k, m) with the closest at {tightest:.1}x",
        runs.lower.len(),
        lower_bound_grid().len()
    ))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ladsim"))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ladsim-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir.join(name)
}

fn c10_single_robot_unknown_n() -> Outcome {
    for alg in ["rooted", "tpr", "general", "gather"] {
        match run_config(&cfg(&format!("algorithm = {alg}\nk = 1\nn_known = false\n"))) {
            Err(ExperimentError::Refused(m)) if m.contains("unsolvable") => {}
            other => return Err(format!("{alg}: expected a refusal, got {:?}", other.map(|r| r.summary()))),
        }
    }
    let conf = scratch("single.cfg");
    let trace = scratch("single.trace");
    std::fs::write(&conf, "algorithm = rooted\nk = 1\nn_known = false\n").map_err(|e| e.to_string())?;
    let out = bin().arg("--config").arg(&conf).arg("--trace-out").arg(&trace).output().map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&out.stderr).trim().to_string();
    if out.status.code() != Some(2) || !stderr.contains("unsolvable") || trace.exists() {
        return Err(format!(
            "binary: status {:?}, stderr {stderr:?}, trace written {}",
            out.status.code(),
            trace.exists()
        ));
    }
    Ok(format!("refused before any round ran: {stderr}"))
}

fn c11_determinism() -> Outcome {
    let pipelines = [
        "algorithm = tpr\ngraph = tree\nn = 30\nk = 6\ncolors = 3\nseed = 4\n",
        "algorithm = rooted_kn\ngraph = random_connected\nn = 12\nm = 18\nk = 12\ncolors = 3\nseed = 4\n",
        "algorithm = rooted\ngraph = random_connected\nn = 24\nm = 36\nk = 4\ncolors = 3\nseed = 4\n",
        "algorithm = rooted\nn_known = false\ngraph = random_connected\nn = 24\nm = 36\nk = 4\ncolors = 3\nseed = 4\n",
        "algorithm = general\ngraph = random_connected\nn = 10\nm = 15\nk = 4\nstart = nodes:0,0,3,5\ncolors = 2\nseed = 4\n",
        "algorithm = dispersed_kn\ngraph = random_connected\nn = 8\nm = 12\nk = 8\nstart = dispersed\ncolors = 2\nseed = 4\n",
        "algorithm = gather\ngraph = random_connected\nn = 20\nm = 30\nk = 4\nstart = nodes:1,5,7,11\ncolors = 3\nseed = 4\n",
    ];
    let mut bytes = 0;
    for (i, text) in pipelines.iter().enumerate() {
        let conf = scratch(&format!("det{i}.cfg"));
        std::fs::write(&conf, text).map_err(|e| e.to_string())?;
        let mut traces = Vec::new();
        let path = scratch(&format!("det{i}.trace"));
        for _ in 0..2 {
            let out =
                bin().arg("--config").arg(&conf).arg("--trace-out").arg(&path).arg("--budget").arg("1e9").output();
            let out = out.map_err(|e| e.to_string())?;
            if out.status.code() != Some(0) {
                return Err(format!(
                    "pipeline {i} exited {:?}: {}",
                    out.status.code(),
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
            traces.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        if traces[0] != traces[1] {
            return Err(format!("pipeline {i}: traces differ between runs"));
        }
        bytes += traces[0].len();
    }
    let sweep = scratch("sweep.cfg");
    std::fs::write(&sweep, "algorithm = rooted\nsweep.n = 10,16\nsweep.k = 2,4\nsweep.seed = 0,1\n")
        .map_err(|e| e.to_string())?;
    let tables: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|t| bin().arg("--config").arg(&sweep).arg("--sweep").env("LADSIM_THREADS", t).output().map(|o| o.stdout))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if tables[0] != tables[1] {
        return Err("sweep output depends on the thread count".into());
    }
    Ok(format!(
        "{} pipelines re-run byte-identical ({bytes} trace bytes); sweep identical on 1 and 3 threads",
        pipelines.len()
    ))
}

fn main() {
    let started = std::time::Instant::now();
    let runs = Runs {
        tpr: run_all(&tpr_configs()),
        dfs: run_all(&dfs_configs()),
        known: run_all(&rooted_known_configs()),
        unknown: run_all(&rooted_unknown_configs()),
        other: run_all(&other_configs()),
        lower: run_all(&lower_bound_configs()),
    };
    let audit = audit_runs();
    let audited = |names: &[&str]| match &audit {
        Ok(a) => audit_line(a, names).map(|l| format!("{l}; groups above k/2 at exploration end: {}", a.over_half)),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("correctness sweep", c1_correctness(&runs)),
        ("port-rotation walk bound", c2_tpr(&runs)),
        ("rooted k = n DFS bound", c3_dfs(&runs)),
        ("rooted known-n bound", c4_rooted_known(&runs)),
        ("unknown-n doubling", c5_unknown_n(&runs)),
        ("meeting protocol", c6_meeting()),
        ("exploration audit", audited(&PHASE1_CHECKS)),
        ("settlement audit", audited(&PHASE3_CHECKS)),
        ("lower-bound family", c9_lower_bound(&runs)),
        ("single robot, n unknown", c10_single_robot_unknown_n()),
        ("determinism", c11_determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass in {:.1}s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    let _ = std::fs::remove_dir_all(scratch("x").parent().expect("scratch dir"));
    if failed > 0 {
        std::process::exit(1);
    }
}
