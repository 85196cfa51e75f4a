//! Rooted protocol with fewer robots than nodes, with n known and unknown,
//! under the omniscient auditor.
//!
//! cargo run --release --example rooted_groups

use ladsim::algo_rooted::audit::run_audited;
use ladsim::algo_rooted::RootedPolicy;
use ladsim::graph::{generate, GenKind, GenParams, RobotSpec};

fn main() {
    let g = generate(GenKind::RandomConnected, &GenParams::n(40).colors(3).edges(60), 5).expect("graph");
    let robots = RobotSpec::sample_feasible(&g, 6, 5);
    for policy in [RootedPolicy::known(g.node_count()), RootedPolicy::unknown()] {
        let (out, report) = run_audited(&policy, &g, &robots, 0, 50_000_000).expect("run");
        let restarts = out.trace.events.iter().filter(|e| e.detail.starts_with("restart")).count() / robots.len();
        println!("n known: {}", policy.n.is_some());
        println!("  {}", out.stats.summary_line());
        println!("  restarts {restarts}, audit violations {}", report.hard_violations());
        for (name, tally) in &report.checks {
            println!("  {name:<17} checked {:>8}", tally.checked);
        }
    }
}
