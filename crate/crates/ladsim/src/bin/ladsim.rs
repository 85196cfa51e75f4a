use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ladsim::cli::config::Config;
use ladsim::cli::experiment::{run_config, run_sweep, sweep_table, write_outputs};
use ladsim::cli::trace_file::TraceFile;

/// Location-aware dispersion simulator.
#[derive(Parser)]
#[command(name = "ladsim", version)]
struct Args {
    #[command(subcommand)]
    command: Option<Command>,
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    trace_out: Option<String>,
    #[arg(long)]
    summary_out: Option<String>,
    /// Run every cell of the config's sweep grid.
    #[arg(long)]
    sweep: bool,
    /// Allowed constant over the round and memory formulas.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print a trace file round by round.
    Replay { trace: String },
}

/// Writes to stdout; a closed pipe is not an error worth reporting.
fn out(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("ladsim: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(Command::Replay { trace }) = &args.command {
        let text = match std::fs::read_to_string(trace) {
            Ok(t) => t,
            Err(e) => return fail(format!("{trace}: {e}")),
        };
        return match TraceFile::parse(&text) {
            Ok(t) => {
                out(&t.render());
                ExitCode::SUCCESS
            }
            Err(e) => fail(format!("{trace}: {e}")),
        };
    }
    let mut cfg = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match Config::parse(&text) {
                Ok(c) => c,
                Err(e) => return fail(format!("{path}: {e}")),
            },
            Err(e) => return fail(format!("{path}: {e}")),
        },
        None => Config::default(),
    };
    if args.trace_out.is_some() {
        cfg.trace_out = args.trace_out.clone();
    }
    if args.summary_out.is_some() {
        cfg.summary_out = args.summary_out.clone();
    }
    if args.budget.is_some() {
        cfg.budget = args.budget;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }

    if args.sweep {
        let threads = std::env::var("LADSIM_THREADS").ok().and_then(|t| t.parse().ok());
        let cells = run_sweep(&cfg, threads);
        let table = sweep_table(&cells);
        out(&table);
        if let Some(p) = &cfg.summary_out {
            if let Err(e) = std::fs::write(p, &table) {
                return fail(format!("{p}: {e}"));
            }
        }
        let all_ok = cells.iter().all(|c| c.result.as_ref().is_ok_and(|r| r.ok()));
        return if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }

    match run_config(&cfg) {
        Ok(r) => {
            out(&format!("{}\n{}\n", r.summary(), r.verdict));
            if let Err(e) = write_outputs(&r) {
                return fail(e);
            }
            ExitCode::from(r.exit_code() as u8)
        }
        Err(e) => fail(e),
    }
}
