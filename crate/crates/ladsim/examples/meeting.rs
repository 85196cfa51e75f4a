//! Meeting codes for a few ids and two neighbours running them.
//!
//! cargo run --example meeting

use std::collections::BTreeMap;

use ladsim::algo_multi::meeting::{meeting_code, meeting_rounds, MeetPolicy};
use ladsim::engine::run_observed;
use ladsim::graph::{PortLabeledGraph, RobotSpec};

fn main() {
    let max_id = 16;
    for id in [1, 2, 7, 16] {
        println!("id {id:>2}: code {}", meeting_code(id, max_id).expect("in range"));
    }
    let g = PortLabeledGraph::build_from_edge_list(2, &[(0, 1)], &[1, 1]).expect("edge");
    let robots = [RobotSpec::new(7, 1), RobotSpec::new(2, 1)];
    let start = BTreeMap::from([(7, 0), (2, 1)]);
    let mut met = None;
    run_observed(&MeetPolicy::new(max_id), &g, &start, &robots, 100, &mut |c| {
        if met.is_none() && c.placement[0] == c.placement[1] {
            met = Some(c.round);
        }
    })
    .expect("run");
    println!("robots 7 and 2 met in round {:?}, guaranteed by {}", met, meeting_rounds(max_id));
}
