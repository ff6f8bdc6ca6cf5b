//! Run execution: dispatch a validated [`RunConfig`] to the requested
//! engine inside a sized worker pool, then write the output files.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ndarray::Array2;

use mcwf::ensemble::{run_ensemble, run_ensemble_with_events, run_single, EnsembleParams};
use mcwf::jump::JumpEvent;
use mcwf::master::me_evolve;
use mcwf::DenseOperator;

use crate::config::{EngineChoice, PresetKind, RunConfig};
use crate::output::{
    events_to_jsonl, resolve_path, write_events_jsonl, write_manifest, write_results_csv, Manifest,
    ResultTable,
};
use crate::CliError;

/// Population above which the hard Fock cutoff is considered unsafe.
const TRUNCATION_WARN_LEVEL: f64 = 1e-6;

#[derive(Debug)]
pub struct ExecutionOutcome {
    pub results_path: PathBuf,
    pub events_path: Option<PathBuf>,
    pub manifest_path: PathBuf,
    pub wall_time: Duration,
    pub n_traj: usize,
}

/// Execute a run: compute the result table (and event log, when requested)
/// and write all output files. Wall time is returned, never written, so
/// outputs stay byte-reproducible.
pub fn execute(
    config: &RunConfig,
    workers: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<ExecutionOutcome, CliError> {
    let started = Instant::now();

    let n_workers = workers
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n_workers)
        .build()
        .map_err(|e| CliError::Malformed(format!("cannot build worker pool: {e}")))?;

    // observables as configured, plus a hidden column watching the top Fock
    // level of cavity models for truncation trouble
    let mut observables: Vec<DenseOperator> = config
        .observables
        .iter()
        .map(|(_, op)| op.clone())
        .collect();
    let truncation_monitor = match config.preset {
        PresetKind::DampedCavity { n_max } => {
            observables.push(
                DenseOperator::basis_projector(config.model.dim(), n_max)
                    .expect("n_max < dim by construction"),
            );
            true
        }
        _ => false,
    };
    let n_visible = config.observables.len();

    let (table, events) = pool.install(|| -> Result<_, CliError> {
        match config.engine {
            EngineChoice::MasterEquation => {
                let rho0 = config.mixture.density();
                let (_, obs) = me_evolve(&config.model, &rho0, &config.grid, &observables)?;
                check_truncation(truncation_monitor, n_visible, &obs);
                let times = config.grid.sample_times();
                let mean = obs.slice(ndarray::s![.., ..n_visible]).to_owned();
                let stderr = Array2::zeros(mean.raw_dim());
                Ok((
                    ResultTable {
                        labels: labels(config),
                        times,
                        mean,
                        stderr,
                    },
                    config.events_path.as_ref().map(|_| Vec::new()),
                ))
            }
            EngineChoice::Trajectory(engine) => {
                let params = EnsembleParams {
                    model: &config.model,
                    mixture: &config.mixture,
                    grid: &config.grid,
                    observables: &observables,
                    engine,
                    n_traj: config.n_traj,
                    master_seed: config.master_seed,
                    delta_p_max: config.delta_p_max,
                };
                let (result, events) = if config.events_path.is_some() {
                    let (r, e) = run_ensemble_with_events(&params)?;
                    (r, Some(e))
                } else {
                    (run_ensemble(&params)?, None)
                };
                check_truncation(truncation_monitor, n_visible, &result.mean);
                Ok((
                    ResultTable {
                        labels: labels(config),
                        times: result.times,
                        mean: result.mean.slice(ndarray::s![.., ..n_visible]).to_owned(),
                        stderr: result.stderr.slice(ndarray::s![.., ..n_visible]).to_owned(),
                    },
                    events,
                ))
            }
        }
    })?;

    let results_path = resolve_path(&config.results_path, out_dir);
    write_results_csv(&results_path, &table, &config.raw)?;

    let events_path = match (&config.events_path, events) {
        (Some(path), Some(per_traj)) => {
            let path = resolve_path(path, out_dir);
            write_events_jsonl(&path, &per_traj)?;
            Some(path)
        }
        _ => None,
    };

    let manifest_path = resolve_path(&config.manifest_path, out_dir);
    let manifest = Manifest::new(&config.raw, config.master_seed, config.n_traj);
    write_manifest(&manifest_path, &manifest)?;

    Ok(ExecutionOutcome {
        results_path,
        events_path,
        manifest_path,
        wall_time: started.elapsed(),
        n_traj: config.n_traj,
    })
}

fn labels(config: &RunConfig) -> Vec<String> {
    config.observables.iter().map(|(l, _)| l.clone()).collect()
}

fn check_truncation(enabled: bool, monitor_col: usize, table: &Array2<f64>) {
    if !enabled {
        return;
    }
    let max_top = table
        .column(monitor_col)
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    if max_top > TRUNCATION_WARN_LEVEL {
        eprintln!(
            "warning: top Fock level reached population {max_top:.3e} (> {TRUNCATION_WARN_LEVEL:.0e}); increase n_max"
        );
    }
}

/// Re-run one trajectory from a manifest and return its event-log lines,
/// byte-identical to the corresponding lines of the original run.
pub fn replay(config: &RunConfig, traj_index: u64) -> Result<(String, Vec<JumpEvent>), CliError> {
    if traj_index as usize >= config.n_traj {
        return Err(CliError::Malformed(format!(
            "trajectory index {traj_index} out of range (n_traj = {})",
            config.n_traj
        )));
    }
    let engine = match config.engine {
        EngineChoice::Trajectory(engine) => engine,
        EngineChoice::MasterEquation => {
            return Err(CliError::Malformed(
                "master_equation runs have no trajectories to replay".into(),
            ))
        }
    };
    let observables: Vec<DenseOperator> = config
        .observables
        .iter()
        .map(|(_, op)| op.clone())
        .collect();
    let params = EnsembleParams {
        model: &config.model,
        mixture: &config.mixture,
        grid: &config.grid,
        observables: &observables,
        engine,
        n_traj: config.n_traj,
        master_seed: config.master_seed,
        delta_p_max: config.delta_p_max,
    };
    let record = run_single(&params, traj_index)?;
    Ok((events_to_jsonl(traj_index, &record.jumps), record.jumps))
}
