//! Port-rotation walk on a random tree: robots from one node settle on the
//! first free node of their color.
//!
//! cargo run --example tree_walk

use std::collections::BTreeMap;

use ladsim::algo_basic::TprPolicy;
use ladsim::engine::run;
use ladsim::graph::{generate, GenKind, GenParams, RobotSpec};
use ladsim::verify::check_lad;

fn main() {
    let g = generate(GenKind::Tree, &GenParams::n(30).colors(3), 1).expect("tree");
    let robots = RobotSpec::sample_feasible(&g, 8, 1);
    let start: BTreeMap<_, _> = robots.iter().map(|r| (r.id, 0)).collect();
    let out = run(&TprPolicy, &g, &start, &robots, 10 * g.node_count() as u64).expect("run");
    println!("{}", out.stats.summary_line());
    for r in &robots {
        let v = out.config.node_of(r.id).expect("placed");
        println!("robot {} (color {}) on node {v} (color {})", r.id, r.color, g.color(v));
    }
    println!("{}", check_lad(&g, &robots, &out.config.placement_map()));
}
