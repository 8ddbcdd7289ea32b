//! Batch CLI: `deadcore run --config path.json [--out dir] [--jobs N]` and
//! `deadcore validate --config path.json`. Exit codes: 0 all assertions
//! passed, 2 an assertion failed, 1 an error occurred.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deadcore::experiments::{self, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "deadcore",
    about = "Batch solver and verification harness for semilinear problems with dead cores",
    long_about = "Runs JSON-configured experiments: direct solves, shape-derivative checks, \
                  kinetic-perturbation studies, truncated-kinetics sequences, and dead-core \
                  audits. Config defaults: tol = 1e-10, eps_dc = max(10*tol, h^2), f = 0, \
                  theta = zero. Outputs summary.json, CSV tables, and legacy VTK fields."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one or more experiment configs
    Run {
        /// Path to a JSON experiment config (repeatable)
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Base output directory; each experiment writes to <out>/<name>/
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Number of configs to run concurrently
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Print per-experiment progress
        #[arg(long, default_value_t = false)]
        verbose: bool,
    },
    /// Parse and validate a config without running it
    Validate {
        /// Path to a JSON experiment config
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    experiments::parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// 0 = passed, 2 = assertion failure, 1 = error
fn run_one(cfg: &ExperimentConfig, out: &PathBuf, verbose: bool) -> u8 {
    let dir = out.join(&cfg.name);
    match experiments::run(cfg, &dir) {
        Ok(outcome) => {
            if verbose {
                eprintln!(
                    "{}: {} ({})",
                    cfg.name,
                    if outcome.passed { "pass" } else { "FAIL" },
                    dir.display()
                );
            }
            if outcome.passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("{}: error: {e}", cfg.name);
            1
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: {}", cfg.name);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid config: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run { config, out, jobs, verbose } => {
            let mut configs = Vec::new();
            for path in &config {
                match load(path) {
                    Ok(cfg) => configs.push(cfg),
                    Err(e) => {
                        eprintln!("invalid config: {e}");
                        return ExitCode::from(1);
                    }
                }
            }
            let jobs = jobs.max(1).min(configs.len().max(1));
            let worst = if jobs == 1 {
                configs
                    .iter()
                    .map(|c| run_one(c, &out, verbose))
                    .max()
                    .unwrap_or(0)
            } else {
                // fixed worker pool over an index queue; each experiment owns
                // its output directory, so workers never share files
                let next = std::sync::atomic::AtomicUsize::new(0);
                std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..jobs)
                        .map(|_| {
                            let next = &next;
                            let configs = &configs;
                            let out = &out;
                            scope.spawn(move || {
                                let mut code = 0u8;
                                loop {
                                    let i = next
                                        .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                                    if i >= configs.len() {
                                        break code;
                                    }
                                    code = code.max(run_one(&configs[i], out, verbose));
                                }
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().unwrap_or(1))
                        .max()
                        .unwrap_or(0)
                })
            };
            ExitCode::from(worst)
        }
    }
}
