//! One robot per node, all starting together: the collective DFS settles a
//! robot on every node.
//!
//! cargo run --example rooted_dfs

use std::collections::BTreeMap;

use ladsim::algo_basic::RootedFullPolicy;
use ladsim::engine::run;
use ladsim::graph::{generate, GenKind, GenParams, RobotSpec};
use ladsim::verify::check_lad;

fn main() {
    let g = generate(GenKind::RandomConnected, &GenParams::n(16).colors(4).edges(28), 2).expect("graph");
    let robots = RobotSpec::sample_feasible(&g, g.node_count(), 2);
    let start: BTreeMap<_, _> = robots.iter().map(|r| (r.id, 0)).collect();
    let out = run(&RootedFullPolicy, &g, &start, &robots, 100 * g.edge_count() as u64).expect("run");
    println!("m = {}: {}", g.edge_count(), out.stats.summary_line());
    println!("{}", check_lad(&g, &robots, &out.config.placement_map()));
}
