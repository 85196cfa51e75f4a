//! The dispersion predicate and the brute-force placement search.
//!
//! cargo run --example placement_oracle

use std::collections::BTreeMap;

use ladsim::graph::{PortLabeledGraph, RobotSpec};
use ladsim::verify::{check_lad, oracle_assignment};

fn main() {
    let g = PortLabeledGraph::build_from_edge_list(4, &[(0, 1), (1, 2), (2, 3)], &[1, 2, 1, 2]).expect("path");
    let robots = vec![RobotSpec::new(1, 1), RobotSpec::new(2, 2), RobotSpec::new(3, 1)];
    let found = oracle_assignment(&g, &robots).expect("feasible");
    println!("oracle placement {found:?}: {}", check_lad(&g, &robots, &found));
    let bad = BTreeMap::from([(1, 0), (2, 0), (3, 1)]);
    println!("hand placement {bad:?}: {}", check_lad(&g, &robots, &bad));
    let too_many = vec![RobotSpec::new(1, 2), RobotSpec::new(2, 2), RobotSpec::new(3, 2)];
    println!("three robots of color 2: {:?}", oracle_assignment(&g, &too_many));
}
