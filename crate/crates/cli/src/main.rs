//! `cranpool`: fronthaul planner and channel-coding benchmark.

mod bench;
mod budget;
mod capacity;
mod config;
mod ratio;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Fronthaul capacity and latency planning, and a parallel turbo-coding
/// benchmark.
#[derive(Debug, Parser)]
#[command(name = "cranpool", version, args_override_self = true)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    // Handled before clap sees the arguments; declared for --help.
    /// Read flags from a key=value file; command-line flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fronthaul rate per functional split and bandwidth.
    Capacity(capacity::Args),
    /// Transport delay and the processing time left before the deadline.
    Budget(budget::Args),
    /// Seeded encode/decode benchmark across parallelism modes.
    Bench(bench::Args),
}

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Capacity(a) => capacity::run(a),
        Command::Budget(a) => budget::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<UsageError>() {
                Some(_) => ExitCode::from(EXIT_USAGE),
                None => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}

/// A bad flag value caught after parsing; exits with the usage code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}
