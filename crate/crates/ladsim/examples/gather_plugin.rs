//! A custom gathering plugin: every robot walks to node 0 along the first
//! port that brings it closer; then the rooted protocol takes over.
//!
//! cargo run --release --example gather_plugin

use std::collections::BTreeMap;

use ladsim::algo_multi::gather::{gather_then_solve, Gatherer};
use ladsim::graph::{generate, GenKind, GenParams, NodeIx, Port, PortLabeledGraph, RobotId, RobotSpec};

struct ToNodeZero;

impl Gatherer for ToNodeZero {
    fn name(&self) -> &'static str {
        "to_node_zero"
    }

    fn step(&mut self, g: &PortLabeledGraph, at: &BTreeMap<RobotId, NodeIx>) -> BTreeMap<RobotId, Port> {
        let d = g.distances(0);
        at.iter()
            .filter(|(_, &v)| v != 0)
            .filter_map(|(&id, &v)| (0..g.degree(v)).find(|&p| d[g.neighbor(v, p)] < d[v]).map(|p| (id, p)))
            .collect()
    }
}

fn main() {
    let g = generate(GenKind::RandomConnected, &GenParams::n(20).colors(3).edges(30), 6).expect("graph");
    let robots = RobotSpec::sample_feasible(&g, 5, 6);
    let start: BTreeMap<_, _> = robots.iter().zip([3, 8, 11, 15, 19]).map(|(r, v)| (r.id, v)).collect();
    let out = gather_then_solve(&g, &robots, &start, &mut ToNodeZero, 40, 10_000_000).expect("gathered and solved");
    println!("{}", out.stats.summary_line());
    println!("gathering took {} rounds", out.stats.phase_rounds("gather"));
}
