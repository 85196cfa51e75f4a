//! Builds an instance from a config, runs the chosen pipeline and checks
//! the outcome.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use super::config::{Algorithm, Config, ConfigError, GraphSource, Limit, RobotColors, Start};
use super::trace_file::TraceFile;
use crate::algo_basic::{RootedFullPolicy, TprPolicy};
use crate::algo_multi::dispersed::{DispersedError, DispersedPolicy};
use crate::algo_multi::gather::{gather_then_solve, parse_move_script, GatherError, MedianGatherer, ScriptedGatherer};
use crate::algo_multi::general::GeneralPolicy;
use crate::algo_rooted::RootedPolicy;
use crate::engine::{run, EngineError, Memory, Policy, RoundStats, RunOutcome, Trace};
use crate::graph::{feasible, generate, GenKind, GenParams, GraphError, NodeIx, PortLabeledGraph, RobotId, RobotSpec};
use crate::verify::{
    baseline, check_bound, check_lad, default_round_limit, BoundCheck, BoundFamily, BoundParams, LadViolation, Verdict,
    REGRESSION_SLACK,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("refused: {0}")]
    Refused(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Gather(#[from] GatherError),
    #[error(transparent)]
    Dispersed(#[from] DispersedError),
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: PortLabeledGraph,
    pub robots: Vec<RobotSpec>,
    pub start: BTreeMap<RobotId, NodeIx>,
}

fn read(path: &str) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::Io { path: path.to_string(), msg: e.to_string() })
}

pub fn build_instance(cfg: &Config) -> Result<Instance, ExperimentError> {
    let graph = match &cfg.graph {
        GraphSource::File(path) => PortLabeledGraph::parse(&read(path)?)?,
        GraphSource::Gen(kind) => {
            let mut p = GenParams::n(cfg.n).colors(cfg.colors);
            if let Some(m) = cfg.m {
                p = p.edges(m);
            }
            if *kind == GenKind::LowerBound {
                p = p.group(cfg.k);
            }
            generate(*kind, &p, cfg.seed)?
        }
    };
    let n = graph.node_count();
    let robots = match &cfg.robot_colors {
        RobotColors::Sample => RobotSpec::sample_feasible(&graph, cfg.k, cfg.seed),
        RobotColors::List(cs) => {
            if cs.len() != cfg.k {
                return Err(ConfigError::Value {
                    key: "robot_colors".into(),
                    msg: format!("{} colors for k = {}", cs.len(), cfg.k),
                }
                .into());
            }
            cs.iter().enumerate().map(|(i, &c)| RobotSpec::new(i as RobotId + 1, c)).collect()
        }
    };
    if robots.len() != cfg.k {
        return Err(ExperimentError::Refused(format!("no feasible draw of {} robots on {n} nodes", cfg.k)));
    }
    let nodes: Vec<NodeIx> = match &cfg.start {
        Start::Rooted(v) => vec![*v; cfg.k],
        Start::Dispersed => (0..cfg.k).collect(),
        Start::Nodes(l) => l.clone(),
    };
    if nodes.len() != cfg.k {
        return Err(ConfigError::Value {
            key: "start".into(),
            msg: format!("{} nodes for k = {}", nodes.len(), cfg.k),
        }
        .into());
    }
    if let Some(v) = nodes.iter().find(|&&v| v >= n) {
        return Err(
            ConfigError::Value { key: "start".into(), msg: format!("node {v} not in a graph of {n} nodes") }.into()
        );
    }
    let start = robots.iter().map(|r| r.id).zip(nodes).collect();
    Ok(Instance { graph, robots, start })
}

fn rooted(start: &BTreeMap<RobotId, NodeIx>) -> bool {
    crate::algo_multi::gather::rooted_at(start).is_some()
}

const UNKNOWN_N_SINGLE: &str =
    "unsolvable: k = 1 with n unknown; a single robot can never tell that it has seen every node, \
     whatever its memory";

/// Refusals decidable from the config alone.
pub fn precheck_config(cfg: &Config) -> Result<(), ExperimentError> {
    if cfg.k == 1 && !cfg.n_known {
        return Err(ExperimentError::Refused(UNKNOWN_N_SINGLE.to_string()));
    }
    if cfg.k == 0 {
        return Err(ExperimentError::Refused("no robots".to_string()));
    }
    Ok(())
}

/// Refuses instances a pipeline cannot handle, before any simulation.
pub fn precheck(cfg: &Config, inst: &Instance) -> Result<(), ExperimentError> {
    let (n, k) = (inst.graph.node_count(), inst.robots.len());
    let refuse = |m: &str| Err(ExperimentError::Refused(m.to_string()));
    if k == 1 && !cfg.n_known {
        return refuse(UNKNOWN_N_SINGLE);
    }
    if !feasible(&inst.graph, &inst.robots)? {
        return refuse("infeasible: some color has more robots than nodes");
    }
    match cfg.algorithm {
        Algorithm::Tpr if !(inst.graph.is_tree() || inst.graph.is_ring()) => {
            refuse("tpr runs on trees, paths and rings only")
        }
        Algorithm::RootedKn if k != n || !rooted(&inst.start) => refuse("rooted_kn needs k = n robots on one node"),
        Algorithm::Rooted if !rooted(&inst.start) => refuse("rooted needs every robot on one node"),
        Algorithm::Rooted if k < 2 => refuse("rooted needs at least two robots"),
        Algorithm::General | Algorithm::DispersedKn if !(cfg.n_known && cfg.k_known) => {
            refuse("this pipeline needs both n and k known")
        }
        Algorithm::General if !has_shared_node(&inst.start) => refuse("general needs a node with two or more robots"),
        Algorithm::Gather if !cfg.n_known => refuse("gather needs n known"),
        Algorithm::Gather if k < 2 => refuse("gather needs at least two robots"),
        _ => Ok(()),
    }
}

fn has_shared_node(start: &BTreeMap<RobotId, NodeIx>) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    start.values().any(|v| !seen.insert(*v))
}

pub fn family(cfg: &Config) -> BoundFamily {
    match cfg.algorithm {
        Algorithm::Tpr => BoundFamily::Tpr,
        Algorithm::RootedKn => BoundFamily::RootedKn,
        Algorithm::Rooted if cfg.n_known => BoundFamily::RootedKnown,
        Algorithm::Rooted => BoundFamily::RootedUnknown,
        Algorithm::General => BoundFamily::General,
        Algorithm::DispersedKn => BoundFamily::DispersedKn,
        Algorithm::Gather => BoundFamily::RootedKnown,
    }
}

/// Outcome of one experiment.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: Config,
    pub instance: Instance,
    /// Final robot positions; empty when the round limit was hit.
    pub placement: BTreeMap<RobotId, NodeIx>,
    pub trace: Trace,
    pub stats: RoundStats,
    pub verdict: Verdict,
    pub bound: BoundCheck,
    pub params: BoundParams,
    /// The run stopped at its round limit.
    pub limit_hit: bool,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.verdict.is_solved() && self.bound.pass
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.verdict.is_solved(), self.bound.pass)
    }

    pub fn summary(&self) -> String {
        format!(
            "algorithm={} family={} n={} k={} m={} seed={} rounds={} solved={} max_bits={} round_ratio={:.3} bits_ratio={:.3} budget_rounds={:.3} budget_bits={:.3} bound_pass={} limit_hit={} digest={}",
            self.config.algorithm.name(),
            self.bound.family.name(),
            self.params.n,
            self.params.k,
            self.params.m,
            self.config.seed,
            self.stats.rounds,
            self.verdict.is_solved(),
            self.stats.max_bits(),
            self.bound.round_ratio,
            self.bound.bits_ratio,
            self.budgets().0,
            self.budgets().1,
            self.bound.pass,
            self.limit_hit,
            self.trace.digest(),
        )
    }

    fn budgets(&self) -> (f64, f64) {
        budgets(&self.config, self.bound.family)
    }

    pub fn trace_file(&self) -> TraceFile {
        TraceFile {
            config: self.config.echo().lines().map(str::to_string).collect(),
            trace: self.trace.clone(),
            rounds: self.stats.rounds,
            solved: self.verdict.is_solved(),
        }
    }
}

/// Exit status as a function of the verdict and the bound check alone.
pub fn exit_code(solved: bool, bound_pass: bool) -> i32 {
    if solved && bound_pass {
        0
    } else {
        1
    }
}

/// Round and bits budgets: the configured constant for both, or each stored
/// baseline with the regression slack.
pub fn budgets(cfg: &Config, fam: BoundFamily) -> (f64, f64) {
    match cfg.budget {
        Some(b) => (b, b),
        None => {
            let (r, b) = baseline(fam);
            (r * REGRESSION_SLACK, b * REGRESSION_SLACK)
        }
    }
}

fn limit(cfg: &Config, auto: u64) -> u64 {
    match cfg.round_limit {
        Limit::Auto => auto,
        Limit::Rounds(r) => r,
    }
}

struct Ran {
    trace: Trace,
    stats: RoundStats,
    placement: BTreeMap<RobotId, NodeIx>,
    limit_hit: bool,
}

fn finish<M: Memory>(r: Result<RunOutcome<M>, EngineError>) -> Result<Ran, ExperimentError> {
    match r {
        Ok(o) => Ok(Ran { placement: o.config.placement_map(), trace: o.trace, stats: o.stats, limit_hit: false }),
        Err(EngineError::RoundLimitExceeded { trace, stats, .. }) => {
            Ok(Ran { trace, stats, placement: BTreeMap::new(), limit_hit: true })
        }
        Err(e) => Err(e.into()),
    }
}

fn go<P: Policy>(p: &P, inst: &Instance, lim: u64) -> Result<Ran, ExperimentError> {
    finish(run(p, &inst.graph, &inst.start, &inst.robots, lim))
}

/// Runs one config end to end.
pub fn run_config(cfg: &Config) -> Result<Report, ExperimentError> {
    precheck_config(cfg)?;
    let inst = build_instance(cfg)?;
    precheck(cfg, &inst)?;
    let g = &inst.graph;
    let fam = family(cfg);
    let params = BoundParams::of(g, inst.robots.len());
    let auto = default_round_limit(fam, &params);
    let ran = match cfg.algorithm {
        Algorithm::Tpr => go(&TprPolicy, &inst, limit(cfg, auto))?,
        Algorithm::RootedKn => go(&RootedFullPolicy, &inst, limit(cfg, auto))?,
        Algorithm::Rooted => {
            let p = if cfg.n_known { RootedPolicy::known(g.node_count()) } else { RootedPolicy::unknown() };
            go(&p, &inst, limit(cfg, auto))?
        }
        Algorithm::General => {
            let p = GeneralPolicy { n: g.node_count(), k: inst.robots.len() };
            let max_id = inst.robots.iter().map(|r| r.id).max().unwrap_or(1);
            go(&p, &inst, limit(cfg, p.round_limit(g.edge_count(), max_id)))?
        }
        Algorithm::DispersedKn => {
            let max_id = inst.robots.iter().map(|r| r.id).max().unwrap_or(1);
            let p = DispersedPolicy::new(g, &inst.robots, &inst.start, max_id)?;
            go(&p, &inst, limit(cfg, p.round_limit(g.edge_count())))?
        }
        Algorithm::Gather => {
            let budget = match cfg.gather_budget {
                Limit::Auto => 4 * g.node_count() as u64,
                Limit::Rounds(r) => r,
            };
            let lim = limit(cfg, auto);
            let out = match &cfg.gather_script {
                Some(path) => {
                    let script = parse_move_script(&read(path)?)
                        .map_err(|e| ExperimentError::Io { path: path.clone(), msg: e.to_string() })?;
                    gather_then_solve(g, &inst.robots, &inst.start, &mut ScriptedGatherer::new(script), budget, lim)
                }
                None => gather_then_solve(g, &inst.robots, &inst.start, &mut MedianGatherer::default(), budget, lim),
            };
            match out {
                Ok(o) => finish::<crate::algo_rooted::RootedMem>(Ok(o))?,
                Err(GatherError::Engine(e)) => finish::<crate::algo_rooted::RootedMem>(Err(e))?,
                Err(e) => return Err(e.into()),
            }
        }
    };
    let verdict = if ran.limit_hit {
        // No final configuration: every robot counts as unplaced.
        Verdict { violations: inst.robots.iter().map(|r| LadViolation::Unplaced { robot: r.id }).collect() }
    } else {
        check_lad(g, &inst.robots, &ran.placement)
    };
    let (br, bb) = budgets(cfg, fam);
    let mut bound = check_bound(&ran.stats, fam, &params, br.max(bb));
    bound.pass = bound.round_ratio <= br && bound.bits_ratio <= bb;
    Ok(Report {
        config: cfg.clone(),
        instance: inst,
        placement: ran.placement,
        trace: ran.trace,
        stats: ran.stats,
        verdict,
        bound,
        params,
        limit_hit: ran.limit_hit,
    })
}

/// Writes the trace and summary files a config asks for.
pub fn write_outputs(r: &Report) -> Result<(), ExperimentError> {
    let write = |path: &str, text: String| {
        std::fs::write(path, text).map_err(|e| ExperimentError::Io { path: path.to_string(), msg: e.to_string() })
    };
    if let Some(p) = &r.config.trace_out {
        write(p, r.trace_file().to_text())?;
    }
    if let Some(p) = &r.config.summary_out {
        write(p, format!("{}\n", r.summary()))?;
    }
    Ok(())
}

/// One finished sweep cell.
pub struct Cell {
    pub coords: Vec<(String, String)>,
    pub result: Result<Report, ExperimentError>,
}

/// Runs every cell of the grid on at most `threads` threads (all cores when
/// `None`). Results come back in grid order.
pub fn run_sweep(cfg: &Config, threads: Option<usize>) -> Vec<Cell> {
    let cells = cfg.expand();
    let work = || {
        cells.par_iter().map(|(coords, c)| Cell { coords: coords.clone(), result: run_config(c) }).collect::<Vec<_>>()
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map(|pool| pool.install(work))
            .unwrap_or_else(|_| work()),
        None => work(),
    }
}

/// Rows: one per cell. Then, when the grid has `n` and `k` axes, a matrix
/// of rounds with `n` down and `k` across, `-` for failed cells.
pub fn sweep_table(cells: &[Cell]) -> String {
    let mut s = String::new();
    for c in cells {
        let at: Vec<String> = c.coords.iter().map(|(k, v)| format!("{k}={v}")).collect();
        match &c.result {
            Ok(r) => {
                let _ = writeln!(s, "cell {} | {}", at.join(" "), r.summary());
            }
            Err(e) => {
                let _ = writeln!(s, "cell {} | error: {e}", at.join(" "));
            }
        }
    }
    let axis = |name: &str| -> Vec<String> {
        let mut v: Vec<String> = Vec::new();
        for c in cells {
            if let Some((_, x)) = c.coords.iter().find(|(k, _)| k == name) {
                if !v.contains(x) {
                    v.push(x.clone());
                }
            }
        }
        v
    };
    let (ns, ks) = (axis("n"), axis("k"));
    if !ns.is_empty() && !ks.is_empty() {
        let _ = writeln!(s, "rounds (rows n, columns k; worst over other axes)");
        let _ = writeln!(s, "{:>8} {}", "n\\k", ks.iter().map(|k| format!("{k:>10}")).collect::<String>());
        for n in &ns {
            let mut row = format!("{n:>8} ");
            for k in &ks {
                let here: Vec<&Cell> = cells
                    .iter()
                    .filter(|c| {
                        c.coords.iter().any(|(a, v)| a == "n" && v == n)
                            && c.coords.iter().any(|(a, v)| a == "k" && v == k)
                    })
                    .collect();
                let worst = here
                    .iter()
                    .map(|c| c.result.as_ref().ok().filter(|r| r.ok()).map(|r| r.stats.rounds))
                    .collect::<Option<Vec<u64>>>();
                let text = match worst {
                    Some(v) if !v.is_empty() => v.into_iter().max().unwrap_or(0).to_string(),
                    _ => "-".into(),
                };
                let _ = write!(row, "{text:>10}");
            }
            let _ = writeln!(s, "{row}");
        }
    }
    s
}
