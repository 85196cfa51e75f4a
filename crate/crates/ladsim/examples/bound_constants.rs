//! Worst measured constants (rounds and bits over their formulas) per bound
//! family, over a few sweep grids. Pass config files to use other grids.
//!
//! cargo run --release --example bound_constants [CONFIG...]

use std::collections::BTreeMap;

use ladsim::cli::config::Config;
use ladsim::cli::experiment::run_sweep;

const BASE: [&str; 5] = [
    "algorithm = tpr\ngraph = tree\nsweep.n = 10,50,100\nsweep.k = 2,5\nsweep.seed = 0,1\n",
    "algorithm = rooted\ngraph = random_connected\ncolors = 2\nsweep.n = 12,24,40\nsweep.k = 2,4,8\nsweep.seed = 0,1\n",
    "algorithm = rooted\nn_known = false\ngraph = random_connected\ncolors = 2\nsweep.n = 12,24,40\nsweep.k = 2,4,8\nsweep.seed = 0,1\n",
    "algorithm = general\ngraph = random_connected\ncolors = 2\nstart = nodes:0,0,3,5\nk = 4\nsweep.n = 8,16\nsweep.seed = 0,1,2\n",
    "algorithm = rooted\ngraph = lower_bound\nk = 5\nsweep.n = 20,40,60\n",
];

/// Pipelines that need one robot per node.
fn full(algorithm: &str, start: &str) -> Vec<String> {
    [6, 10, 16]
        .iter()
        .map(|n| format!("algorithm = {algorithm}\ngraph = random_connected\ncolors = 2\nn = {n}\nk = {n}\nstart = {start}\nsweep.seed = 0,1,2\n"))
        .collect()
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let texts: Vec<String> = if args.is_empty() {
        let mut t: Vec<String> = BASE.iter().map(|s| s.to_string()).collect();
        t.extend(full("rooted_kn", "rooted:0"));
        t.extend(full("dispersed_kn", "dispersed"));
        t
    } else {
        args.iter().map(|p| std::fs::read_to_string(p).expect("readable config")).collect()
    };
    let mut worst: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for text in texts {
        let mut cfg = Config::parse(&text).expect("valid grid");
        // Only the ratios matter here.
        cfg.budget = Some(f64::MAX);
        for cell in run_sweep(&cfg, None) {
            match cell.result {
                Ok(r) if r.verdict.is_solved() => {
                    let w = worst.entry(r.bound.family.name()).or_insert((0.0, 0.0, 0));
                    w.0 = w.0.max(r.bound.round_ratio);
                    w.1 = w.1.max(r.bound.bits_ratio);
                    w.2 += 1;
                }
                Ok(r) => println!("unsolved: {}", r.summary()),
                Err(e) => println!("error at {:?}: {e}", cell.coords),
            }
        }
    }
    for (fam, (r, b, count)) in worst {
        println!("{fam:<15} runs={count:<4} round_constant={r:.3} bits_constant={b:.3}");
    }
}
