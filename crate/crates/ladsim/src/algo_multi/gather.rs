//! Collect every robot on one node with an outside helper, then run the
//! rooted protocol from there.
//!
//! The helper sees the whole graph and all positions; the harness only lets
//! it move robots along real edges and gives it a fixed number of rounds.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::algo_rooted::{RootedMem, RootedPolicy};
use crate::engine::{run, EngineError, EventKind, RunOutcome, TraceEvent};
use crate::graph::{NodeIx, Port, PortLabeledGraph, RobotId, RobotSpec};

/// Outside helper that moves robots until they share one node.
pub trait Gatherer {
    fn name(&self) -> &'static str;

    /// Moves for one round; robots left out stay put.
    fn step(&mut self, g: &PortLabeledGraph, at: &BTreeMap<RobotId, NodeIx>) -> BTreeMap<RobotId, Port>;
}

/// Sends every robot along a shortest path to the node with the smallest
/// total distance to all robots (lowest index on ties).
#[derive(Debug, Default, Clone)]
pub struct MedianGatherer {
    /// Port toward the target from each node, fixed on first use.
    toward: Option<Vec<Option<Port>>>,
}

impl MedianGatherer {
    fn plan(g: &PortLabeledGraph, at: &BTreeMap<RobotId, NodeIx>) -> Vec<Option<Port>> {
        let starts: Vec<Vec<usize>> = at.values().map(|&v| g.distances(v)).collect();
        let target = (0..g.node_count())
            .min_by_key(|&v| (starts.iter().map(|d| d[v]).sum::<usize>(), v))
            .expect("graph has nodes");
        let mut toward = vec![None; g.node_count()];
        let mut seen = vec![false; g.node_count()];
        seen[target] = true;
        let mut queue = VecDeque::from([target]);
        while let Some(v) = queue.pop_front() {
            for p in 0..g.degree(v) {
                let l = g.link(v, p);
                if !seen[l.node] {
                    seen[l.node] = true;
                    toward[l.node] = Some(l.back);
                    queue.push_back(l.node);
                }
            }
        }
        toward
    }
}

impl Gatherer for MedianGatherer {
    fn name(&self) -> &'static str {
        "median"
    }

    fn step(&mut self, g: &PortLabeledGraph, at: &BTreeMap<RobotId, NodeIx>) -> BTreeMap<RobotId, Port> {
        let toward = self.toward.get_or_insert_with(|| Self::plan(g, at));
        at.iter().filter_map(|(&id, &v)| toward[v].map(|p| (id, p))).collect()
    }
}

/// Text form of a gathering plan: one line per round, each a
/// space-separated list of `robot:port` moves. Blank lines are rounds
/// without moves; `#` starts a comment.
pub fn parse_move_script(text: &str) -> Result<Vec<BTreeMap<RobotId, Port>>, ScriptError> {
    let mut rounds = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        let mut moves = BTreeMap::new();
        for item in body.split_whitespace() {
            let bad = || ScriptError { line: i + 1, item: item.to_string() };
            let (id, port) = item.split_once(':').ok_or_else(bad)?;
            let id: RobotId = id.parse().map_err(|_| bad())?;
            let port: Port = port.parse().map_err(|_| bad())?;
            if moves.insert(id, port).is_some() {
                return Err(bad());
            }
        }
        rounds.push(moves);
    }
    Ok(rounds)
}

pub fn format_move_script(rounds: &[BTreeMap<RobotId, Port>]) -> String {
    let mut out = String::new();
    for moves in rounds {
        let items: Vec<String> = moves.iter().map(|(id, p)| format!("{id}:{p}")).collect();
        out.push_str(&items.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad move {item:?} on line {line}")]
pub struct ScriptError {
    pub line: usize,
    pub item: String,
}

/// Replays a fixed plan, then stops moving.
#[derive(Debug, Clone, Default)]
pub struct ScriptedGatherer {
    pub rounds: Vec<BTreeMap<RobotId, Port>>,
    next: usize,
}

impl ScriptedGatherer {
    pub fn new(rounds: Vec<BTreeMap<RobotId, Port>>) -> Self {
        ScriptedGatherer { rounds, next: 0 }
    }
}

impl Gatherer for ScriptedGatherer {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn step(&mut self, _: &PortLabeledGraph, _: &BTreeMap<RobotId, NodeIx>) -> BTreeMap<RobotId, Port> {
        let moves = self.rounds.get(self.next).cloned().unwrap_or_default();
        self.next += 1;
        moves
    }
}

#[derive(Debug, Error)]
pub enum GatherError {
    #[error("gatherer {name} did not collect the robots within {rounds} rounds")]
    PluginTimeout { name: &'static str, rounds: u64 },
    #[error("gatherer moved robot {robot} through missing port {port} in round {round}")]
    InvalidMove { round: u64, robot: RobotId, port: Port },
    #[error("gatherer moved unknown robot {robot} in round {round}")]
    UnknownRobot { round: u64, robot: RobotId },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Node holding every robot, if there is one.
pub fn rooted_at(at: &BTreeMap<RobotId, NodeIx>) -> Option<NodeIx> {
    let first = *at.values().next()?;
    at.values().all(|&v| v == first).then_some(first)
}

/// Gathers with `plugin` (skipped when already rooted) and then disperses
/// with the rooted protocol for known `n`. Gathering rounds come first in
/// the returned trace and statistics, under the phase label `gather`.
pub fn gather_then_solve(
    g: &PortLabeledGraph,
    robots: &[RobotSpec],
    start: &BTreeMap<RobotId, NodeIx>,
    plugin: &mut dyn Gatherer,
    gather_budget: u64,
    round_limit: u64,
) -> Result<RunOutcome<RootedMem>, GatherError> {
    let mut at = start.clone();
    let mut events = Vec::new();
    let mut round = 0;
    while rooted_at(&at).is_none() {
        if round >= gather_budget {
            return Err(GatherError::PluginTimeout { name: plugin.name(), rounds: gather_budget });
        }
        round += 1;
        let moves = plugin.step(g, &at);
        for (&robot, &port) in &moves {
            let v = *at.get(&robot).ok_or(GatherError::UnknownRobot { round, robot })?;
            if port >= g.degree(v) {
                return Err(GatherError::InvalidMove { round, robot, port });
            }
        }
        for (robot, port) in moves {
            let v = at[&robot];
            let to = g.link(v, port).node;
            events.push(TraceEvent {
                round,
                robot,
                node: v,
                kind: EventKind::Moved,
                detail: format!("port={port} to={to}"),
            });
            at.insert(robot, to);
        }
    }
    let gathered = round;
    let mut out = run(&RootedPolicy::known(g.node_count()), g, &at, robots, round_limit)?;
    for e in &mut out.trace.events {
        e.round += gathered;
    }
    events.append(&mut out.trace.events);
    out.trace.events = events;
    if gathered > 0 {
        out.stats.moves = out.trace.count(EventKind::Moved) as u64;
        out.stats.rounds += gathered;
        out.stats.phases.insert(0, ("gather".to_string(), gathered));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GenKind, GenParams};

    fn scattered(seed: u64) -> (PortLabeledGraph, Vec<RobotSpec>, BTreeMap<RobotId, NodeIx>) {
        let g = generate(GenKind::RandomConnected, &GenParams::n(14).colors(2).edges(20), seed).unwrap();
        let robots = RobotSpec::sample_feasible(&g, 5, seed);
        let start = robots.iter().map(|r| (r.id, (r.id as usize * 3 + seed as usize) % 14)).collect();
        (g, robots, start)
    }

    #[test]
    fn median_gatherer_then_rooted_solves() {
        for seed in 0..6 {
            let (g, robots, start) = scattered(seed);
            let out = gather_then_solve(&g, &robots, &start, &mut MedianGatherer::default(), 100, 10_000_000).unwrap();
            assert!(out.stats.solved);
            assert!(out.stats.phase_rounds("gather") <= g.node_count() as u64);
            assert_eq!(out.trace.events.first().map(|e| e.round), Some(1));
        }
    }

    #[test]
    fn three_robots_on_p5_meet_at_the_median() {
        let g = crate::graph::generate(GenKind::Path, &GenParams::n(5), 0).unwrap();
        let robots: Vec<RobotSpec> = (1..=3).map(|i| RobotSpec::new(i, g.color(i as usize))).collect();
        let start = BTreeMap::from([(1, 0), (2, 1), (3, 4)]);
        let mut plugin = MedianGatherer::default();
        let first = plugin.step(&g, &start);
        // Total distances from nodes 0..5: 6, 5, 6, 7, 8, so node 1 is the target.
        assert!(!first.contains_key(&2));
        let out = gather_then_solve(&g, &robots, &start, &mut MedianGatherer::default(), 10, 1_000_000).unwrap();
        assert!(out.stats.solved);
        assert_eq!(out.stats.phase_rounds("gather"), 3);
    }

    #[test]
    fn move_script_round_trips_and_drives_a_gather() {
        let text = "1:0 2:1\n\n3:0 # last\n";
        let rounds = parse_move_script(text).unwrap();
        assert_eq!(rounds.len(), 3);
        assert_eq!(parse_move_script(&format_move_script(&rounds)).unwrap(), rounds);
        assert_eq!(parse_move_script("1:0\n2-1").unwrap_err(), ScriptError { line: 2, item: "2-1".into() });
        assert!(parse_move_script("1:0 1:1").is_err());

        let g = crate::graph::generate(GenKind::Path, &GenParams::n(5), 0).unwrap();
        let robots: Vec<RobotSpec> = (1..=2).map(|i| RobotSpec::new(i, g.color(i as usize))).collect();
        let start = BTreeMap::from([(1, 0), (2, 2)]);
        let port = (0..g.degree(2)).find(|&p| g.neighbor(2, p) == 1).unwrap();
        let mut plugin = ScriptedGatherer::new(parse_move_script(&format!("1:0 2:{port}\n")).unwrap());
        let out = gather_then_solve(&g, &robots, &start, &mut plugin, 5, 1_000_000).unwrap();
        assert!(out.stats.solved);
    }

    struct Stuck;
    impl Gatherer for Stuck {
        fn name(&self) -> &'static str {
            "stuck"
        }
        fn step(&mut self, _: &PortLabeledGraph, _: &BTreeMap<RobotId, NodeIx>) -> BTreeMap<RobotId, Port> {
            BTreeMap::new()
        }
    }

    struct Wild;
    impl Gatherer for Wild {
        fn name(&self) -> &'static str {
            "wild"
        }
        fn step(&mut self, _: &PortLabeledGraph, at: &BTreeMap<RobotId, NodeIx>) -> BTreeMap<RobotId, Port> {
            at.keys().map(|&id| (id, 99)).collect()
        }
    }

    #[test]
    fn stuck_plugin_times_out_and_bad_moves_are_caught() {
        let (g, robots, start) = scattered(1);
        let err = gather_then_solve(&g, &robots, &start, &mut Stuck, 10, 1000).unwrap_err();
        assert!(matches!(err, GatherError::PluginTimeout { rounds: 10, .. }));
        let err = gather_then_solve(&g, &robots, &start, &mut Wild, 10, 1000).unwrap_err();
        assert!(matches!(err, GatherError::InvalidMove { round: 1, port: 99, .. }));
    }

    #[test]
    fn rooted_start_skips_the_plugin() {
        let (g, robots, _) = scattered(2);
        let start = robots.iter().map(|r| (r.id, 4)).collect();
        let out = gather_then_solve(&g, &robots, &start, &mut Stuck, 0, 10_000_000).unwrap();
        assert!(out.stats.solved);
        assert_eq!(out.stats.phase_rounds("gather"), 0);
    }
}
