use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mcwf_cli::config::parse_config;
use mcwf_cli::output::{read_manifest, resolve_path};
use mcwf_cli::runner::{execute, replay};
use mcwf_cli::validate::{run_suite, SuiteKind};
use mcwf_cli::CliError;

/// Stochastic wave-function simulator for Markovian open quantum systems.
#[derive(Parser)]
#[command(name = "mcwf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Directory for relative output paths.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run configuration file.
    Run {
        config: PathBuf,
        /// Override the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a built-in validation suite: identities, oracle_small or statistics.
    Validate {
        suite: String,
        /// Shrink sample sizes; statistical tolerances widen as 1/sqrt(scale).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Re-run one trajectory from a run manifest and print its event log.
    Replay { manifest: PathBuf, traj_index: u64 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, seed } => {
            let text = std::fs::read_to_string(&config).map_err(|source| CliError::Io {
                path: config.clone(),
                source,
            })?;
            let run_config = parse_config(&text, seed)?;
            let outcome = execute(&run_config, cli.workers, cli.out.as_deref())?;
            eprintln!(
                "run complete: {} trajectories in {:.2?}",
                outcome.n_traj, outcome.wall_time
            );
            println!("results  {}", outcome.results_path.display());
            if let Some(events) = &outcome.events_path {
                println!("events   {}", events.display());
            }
            println!("manifest {}", outcome.manifest_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { suite, scale, json } => {
            let kind = SuiteKind::parse(&suite).ok_or_else(|| {
                CliError::Malformed(format!(
                    "unknown suite \"{suite}\" (expected identities, oracle_small or statistics)"
                ))
            })?;
            if scale.is_nan() || scale <= 0.0 {
                return Err(CliError::Malformed(format!(
                    "--scale must be > 0, got {scale}"
                )));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cli.workers.unwrap_or_else(|| {
                    std::thread::available_parallelism()
                        .map(|n| n.get())
                        .unwrap_or(1)
                }))
                .build()
                .map_err(|e| CliError::Malformed(format!("cannot build worker pool: {e}")))?;
            let report = pool.install(|| run_suite(kind, scale));
            for check in &report.checks {
                println!(
                    "{} {} | measured {:.6e} expected {:.6e} tol {:.3e}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.measured,
                    check.expected,
                    check.tolerance
                );
            }
            println!(
                "suite {}: {} ({}/{} checks)",
                report.suite,
                if report.passed { "PASS" } else { "FAIL" },
                report.checks.iter().filter(|c| c.passed).count(),
                report.checks.len()
            );
            if let Some(path) = json {
                let path = resolve_path(&path, cli.out.as_deref());
                let text = serde_json::to_string_pretty(&report).expect("report serialization");
                std::fs::write(&path, text + "\n")
                    .map_err(|source| CliError::Io { path, source })?;
            }
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Replay {
            manifest,
            traj_index,
        } => {
            let manifest = read_manifest(&manifest)?;
            let run_config = mcwf_cli::config::resolve(manifest.config)?;
            let (jsonl, events) = replay(&run_config, traj_index)?;
            print!("{jsonl}");
            eprintln!("trajectory {traj_index}: {} jumps", events.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}
