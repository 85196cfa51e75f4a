//! One robot on every node: meet a neighbour first, then disperse again.
//!
//! cargo run --release --example dispersed_start

use ladsim::algo_multi::dispersed::DispersedPolicy;
use ladsim::engine::run;
use ladsim::graph::{generate, GenKind, GenParams, RobotSpec};
use ladsim::verify::check_lad;

fn main() {
    let g = generate(GenKind::Ring, &GenParams::n(8).colors(2), 4).expect("ring");
    let robots = RobotSpec::sample_feasible(&g, 8, 4);
    let start = robots.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let policy = DispersedPolicy::new(&g, &robots, &start, 8).expect("one robot per node");
    let out = run(&policy, &g, &start, &robots, policy.round_limit(g.edge_count())).expect("run");
    println!("{}", out.stats.summary_line());
    println!("{}", check_lad(&g, &robots, &out.config.placement_map()));
}
