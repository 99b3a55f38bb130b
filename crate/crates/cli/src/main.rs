use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vmc_cli::sweep::expand_grid;
use vmc_cli::{floor_fit, load_config, output_dir, report, run_in_dir, REPORT_FILE};

#[derive(Parser)]
#[command(name = "vmc", version, about = "Variational Monte Carlo experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run { config: PathBuf },
    /// Run the cartesian product of every array-valued key.
    Sweep {
        config: PathBuf,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Fit the sampling floor across run directories.
    FloorFit {
        #[arg(required = true, num_args = 3..)]
        dirs: Vec<PathBuf>,
    },
    /// Summarize a run directory.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means a run stopped on a numerical failure.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let dir = output_dir(&config);
            let summary = run_in_dir(&config, &dir)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(err) = &summary.error {
                eprintln!("run failed at iteration {}: {err}", summary.failed_iteration.unwrap_or(0));
            }
            Ok(summary.error.is_none())
        }
        Command::Sweep { config, jobs } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let points = expand_grid(&text).with_context(|| format!("in {}", config.display()))?;
            let next = AtomicUsize::new(0);
            let all_ok = Mutex::new(true);
            std::thread::scope(|s| {
                for _ in 0..jobs.max(1) {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(point) = points.get(i) else { break };
                        let dir = output_dir(&point.config);
                        let ok = match run_in_dir(&point.config, &dir) {
                            Ok(summary) => {
                                println!("{}: {} iterations{}", point.label, summary.iterations_completed,
                                    summary.error.map(|e| format!(", failed: {e}")).unwrap_or_default());
                                summary.failed_iteration.is_none()
                            }
                            Err(e) => {
                                eprintln!("{}: {e:#}", point.label);
                                false
                            }
                        };
                        if !ok {
                            *all_ok.lock().expect("flag") = false;
                        }
                    });
                }
            });
            Ok(all_ok.into_inner().expect("flag"))
        }
        Command::FloorFit { dirs } => {
            let fit = floor_fit(&dirs)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(true)
        }
        Command::Report { dir } => {
            let report = report(&dir)?;
            let text = serde_json::to_string_pretty(&report)?;
            fs::write(dir.join(REPORT_FILE), &text)?;
            println!("{text}");
            Ok(true)
        }
    }
}
