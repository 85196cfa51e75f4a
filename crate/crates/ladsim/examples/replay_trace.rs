//! Run a config, write its trace file, read it back and print the replay.
//!
//! cargo run --example replay_trace

use ladsim::cli::config::Config;
use ladsim::cli::experiment::run_config;
use ladsim::cli::trace_file::TraceFile;

fn main() {
    let cfg =
        Config::parse("graph = ring\nn = 8\ncolors = 1\nk = 4\nstart = rooted:0\nalgorithm = tpr\n").expect("config");
    let report = run_config(&cfg).expect("run");
    let text = report.trace_file().to_text();
    print!("{text}");
    let back = TraceFile::parse(&text).expect("own trace parses");
    print!("{}", back.render());
    println!("exit code would be {}", report.exit_code());
}
