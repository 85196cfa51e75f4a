//! Arbitrary start: two robots share node 0, the rest are alone.
//!
//! cargo run --release --example general_start

use std::collections::BTreeMap;

use ladsim::algo_multi::general::GeneralPolicy;
use ladsim::engine::{run, EventKind};
use ladsim::graph::{generate, GenKind, GenParams, RobotSpec};
use ladsim::verify::check_lad;

fn main() {
    let g = generate(GenKind::RandomConnected, &GenParams::n(12).colors(2).edges(18), 3).expect("graph");
    let robots = RobotSpec::sample_feasible(&g, 5, 3);
    let start: BTreeMap<_, _> = robots.iter().zip([0, 0, 4, 7, 9]).map(|(r, v)| (r.id, v)).collect();
    let policy = GeneralPolicy { n: g.node_count(), k: robots.len() };
    let out = run(&policy, &g, &start, &robots, policy.round_limit(g.edge_count(), 5)).expect("run");
    println!("{}", out.stats.summary_line());
    println!("merge events: {}", out.trace.count(EventKind::Merged));
    println!("{}", check_lad(&g, &robots, &out.config.placement_map()));
}
