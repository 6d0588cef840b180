use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use gauss_extremes::experiment::{run_with_threads, ExperimentConfig};
use gauss_extremes::Error;

#[derive(Parser)]
#[command(version, about = "Run extreme-value experiments described by JSON configs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment and write <stem>.csv and <stem>.json.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root seed; overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn report(e: &Error) {
    eprintln!("error: {e}");
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Validate { config } => match ExperimentConfig::load(&config).and_then(|c| c.validate()) {
            Ok(()) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                report(&e);
                ExitCode::from(2)
            }
        },
        Cmd::Run { config, out, seed, threads } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    report(&e);
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out.or_else(|| cfg.output.dir.clone().map(PathBuf::from)).unwrap_or_else(|| ".".into());
            let table = match run_with_threads(&cfg, threads) {
                Ok(t) => t,
                Err(e) => {
                    report(&e);
                    return ExitCode::from(2);
                }
            };
            match table.write(&dir) {
                Ok((csv, json)) => println!("wrote {} and {}", csv.display(), json.display()),
                Err(e) => {
                    report(&e);
                    return ExitCode::from(2);
                }
            }
            for r in table.failures() {
                eprintln!("FAIL {} {} estimate={} tolerance={:?}", r.metric, r.params, r.estimate, r.tolerance);
            }
            let verdict = if table.pass() { "pass" } else { "fail" };
            println!("{} rows, {verdict}, {:.2} s", table.rows.len(), table.runtime_seconds);
            if table.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
