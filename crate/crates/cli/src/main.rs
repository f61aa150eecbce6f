//! `carshift run --config <path> [--out <dir>] [--seed <u64>]` and `carshift list`.

mod config;
mod report;
mod runner;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use runner::RunError;

#[derive(Parser)]
#[command(name = "carshift", version, about = "Runs CAR-algebra and shift-flow experiments from config files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes <kind>.csv and <kind>.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List experiment kinds and their parameters (* marks required).
    List,
}

const EXIT_VERDICT: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::List => {
            let mut out = std::io::stdout().lock();
            for (kind, params) in runner::schemas() {
                let listed = writeln!(out, "{:<17} {}", kind.name(), kind.summary())
                    .and_then(|_| writeln!(out, "{:<17} params: {params}", ""));
                if listed.is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => run(&config, out, seed),
    }
}

fn run(path: &PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if seed.is_some() {
        cfg.seed = seed;
    }
    let dir = out
        .or_else(|| cfg.output.as_ref().map(|o| cfg.resolve(o)))
        .unwrap_or_else(|| PathBuf::from("."));
    let report = match runner::run(&cfg) {
        Ok(r) => r,
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VERDICT);
        }
    };
    for v in &report.verdicts {
        println!("{} [{:>2}] {}: {}", if v.pass { "pass" } else { "FAIL" }, v.criterion, v.check, v.detail);
    }
    match report.write(&dir) {
        Ok((csv, json)) => println!("wrote {} and {} ({:.2}s)", csv.display(), json.display(), report.wall_clock_s),
        Err(e) => {
            eprintln!("cannot write reports to {}: {e}", dir.display());
            return ExitCode::from(EXIT_VERDICT);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERDICT)
    }
}
