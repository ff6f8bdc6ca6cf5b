//! Ensemble management: initial-state sampling from mixtures, the sample-mean
//! estimator with per-time standard errors, and reconstruction of the
//! ensemble-averaged density matrix for equivalence checks.
//!
//! Trajectories are grouped into fixed-size blocks; blocks run in parallel
//! and their partial statistics are merged by pairwise reduction in index
//! order. The block layout depends only on `n_traj`, so results are
//! bit-identical for any worker count.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::diffusion::{drive_qsd_trajectory, warn_finite_mu_regime, DiffusionMethod};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::jump::{drive_jump_trajectory, drive_waiting_time_trajectory, JumpEvent, StepMethod};
use crate::linalg::{c, DenseOperator, DensityMatrix, StateVector, NORM_TOL};
use crate::model::{homodyne_channels, HomodyneScheme, LindbladModel};
use crate::rng::TrajectoryRng;

/// Trajectories per statistics block. Fixed so that the merge tree (and
/// therefore every output bit) is independent of the worker count.
const BLOCK: usize = 64;

/// A statistical mixture of pure states for the initial condition.
#[derive(Debug, Clone)]
pub struct InitialMixture {
    components: Vec<(f64, StateVector)>,
}

impl InitialMixture {
    pub fn new(components: Vec<(f64, StateVector)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMixture("mixture has no components".into()));
        }
        let dim = components[0].1.dim();
        let mut total = 0.0;
        for (p, state) in &components {
            if *p < 0.0 {
                return Err(Error::InvalidMixture(format!("negative probability {p}")));
            }
            if state.dim() != dim {
                return Err(Error::InvalidMixture(format!(
                    "component dimension {} differs from {dim}",
                    state.dim()
                )));
            }
            let norm = state.norm();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidMixture(format!(
                    "component state has norm {norm}"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidMixture(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(InitialMixture { components })
    }

    /// A single pure state with probability 1.
    pub fn pure(state: StateVector) -> Self {
        InitialMixture {
            components: vec![(1.0, state)],
        }
    }

    pub fn components(&self) -> &[(f64, StateVector)] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }

    /// The density matrix `sum_i p_i |chi_i><chi_i|`.
    pub fn density(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut m: Array2<Complex64> = Array2::zeros((dim, dim));
        for (p, state) in &self.components {
            let amps = state.amplitudes();
            let w = c(*p, 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    m[[i, j]] += w * amps[i] * amps[j].conj();
                }
            }
        }
        let mut rho = DensityMatrix::from_matrix_unchecked(m);
        rho.hermitize();
        rho
    }
}

/// Draw one component: the first whose cumulative probability exceeds the
/// uniform draw. Always consumes exactly one uniform, so the substream
/// layout does not depend on the mixture size.
pub fn sample_initial(mixture: &InitialMixture, rng: &mut TrajectoryRng) -> StateVector {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (p, state) in mixture.components() {
        acc += p;
        if u < acc {
            return state.clone();
        }
    }
    mixture
        .components()
        .last()
        .expect("mixture validated nonempty")
        .1
        .clone()
}

/// Which stochastic engine propagates each trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unraveling {
    EulerOrder1,
    Rk4NonHermitian,
    WaitingTime,
    ItoComplex,
    ItoReal,
    FiniteMu { mu: f64, scheme: HomodyneScheme },
}

/// Inputs of one ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleParams<'a> {
    pub model: &'a LindbladModel,
    pub mixture: &'a InitialMixture,
    pub grid: &'a TimeGrid,
    pub observables: &'a [DenseOperator],
    pub engine: Unraveling,
    pub n_traj: usize,
    pub master_seed: u64,
    pub delta_p_max: f64,
}

/// Ensemble means with standard errors, one row per sample time.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub mean: Array2<f64>,
    /// Sample standard deviation across trajectories divided by `sqrt(n)`.
    pub stderr: Array2<f64>,
    pub n_traj: usize,
    /// Mean jumps per unit time for each channel of the engine's model
    /// (the homodyne channel set for `FiniteMu`).
    pub jump_rate_per_channel: Vec<f64>,
}

/// Run the ensemble, streaming per-trajectory observable tables into
/// blockwise Welford accumulators.
pub fn run_ensemble(params: &EnsembleParams) -> Result<EnsembleResult> {
    let (result, _) = run_impl(params, false)?;
    Ok(result)
}

/// Like [`run_ensemble`], additionally returning the jump events of every
/// trajectory in index order (memory scales with the total jump count).
pub fn run_ensemble_with_events(
    params: &EnsembleParams,
) -> Result<(EnsembleResult, Vec<Vec<JumpEvent>>)> {
    let (result, events) = run_impl(params, true)?;
    Ok((result, events.expect("events requested")))
}

/// Re-run trajectory `traj_index` of the ensemble in isolation. Substream
/// derivation and stepping are identical to the full run, so the returned
/// record is bit-identical to what the ensemble produced internally.
pub fn run_single(
    params: &EnsembleParams,
    traj_index: u64,
) -> Result<crate::jump::TrajectoryRecord> {
    if params.mixture.dim() != params.model.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.model.dim(),
            got: params.mixture.dim(),
        });
    }
    let (engine_model, mode) = prepare_engine(params)?;
    let grid = params.grid;
    let dim = params.model.dim();
    let mut rng = TrajectoryRng::substream(params.master_seed, traj_index);
    let phi0 = sample_initial(params.mixture, &mut rng);

    let mut table = Array2::zeros((grid.n_samples(), params.observables.len()));
    let mut buf = Array1::zeros(dim);
    let (events, final_amps) = {
        let observables = params.observables;
        let table = &mut table;
        let buf = &mut buf;
        let mut on_sample = |idx: usize, _t: f64, amps: &Array1<Complex64>| {
            for (j, op) in observables.iter().enumerate() {
                crate::linalg::matvec_into(op.entries(), amps, buf);
                let val: Complex64 = amps.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum();
                table[[idx, j]] = val.re;
            }
        };
        drive_one(
            &engine_model,
            mode,
            &phi0,
            grid,
            params.delta_p_max,
            &mut rng,
            &mut on_sample,
        )?
    };
    Ok(crate::jump::TrajectoryRecord {
        times: grid.sample_times(),
        observable_values: table,
        jumps: events,
        final_state: StateVector::normalized(final_amps).expect("drivers keep states normalized"),
        seed_info: crate::jump::SeedInfo {
            master_seed: params.master_seed,
            trajectory_index: traj_index,
        },
        dt: grid.dt(),
    })
}

/// Ensemble average of the projectors `|phi(t)><phi(t)|` at the sample times
/// nearest to each requested time: the reconstructed density matrix the
/// equivalence theorem compares against the master equation.
pub fn mean_density(params: &EnsembleParams, sample_times: &[f64]) -> Result<Vec<DensityMatrix>> {
    validate_params(params)?;
    if sample_times.is_empty() {
        return Err(Error::InvalidParameter("no sample times requested".into()));
    }
    let (engine_model, mode) = prepare_engine(params)?;
    let grid = params.grid;
    let indices: Vec<usize> = sample_times
        .iter()
        .map(|&t| grid.nearest_sample_index(t))
        .collect();
    let dim = params.model.dim();
    let n_blocks = params.n_traj.div_ceil(BLOCK);

    let partials: Result<Vec<DensityPartial>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(params.n_traj);
            let mut partial = DensityPartial::zeros(indices.len(), dim);
            for traj in lo..hi {
                let mut rng = TrajectoryRng::substream(params.master_seed, traj as u64);
                let phi0 = sample_initial(params.mixture, &mut rng);
                let mut on_sample = |idx: usize, _t: f64, amps: &Array1<Complex64>| {
                    for (slot, &want) in indices.iter().enumerate() {
                        if want == idx {
                            accumulate_projector(&mut partial.sums[slot], amps);
                        }
                    }
                };
                drive_one(
                    &engine_model,
                    mode,
                    &phi0,
                    grid,
                    params.delta_p_max,
                    &mut rng,
                    &mut on_sample,
                )?;
                partial.count += 1;
            }
            Ok(partial)
        })
        .collect();
    let merged = pairwise_reduce(partials?, DensityPartial::merge);

    let inv = c(1.0 / merged.count as f64, 0.0);
    Ok(merged
        .sums
        .into_iter()
        .map(|sum| {
            let mut rho = DensityMatrix::from_matrix_unchecked(sum.mapv(|z| z * inv));
            rho.hermitize();
            rho
        })
        .collect())
}

fn validate_params(params: &EnsembleParams) -> Result<()> {
    if params.n_traj < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_traj must be >= 2 for ensemble statistics, got {}",
            params.n_traj
        )));
    }
    if params.mixture.dim() != params.model.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.model.dim(),
            got: params.mixture.dim(),
        });
    }
    for op in params.observables {
        if op.dim() != params.model.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.model.dim(),
                got: op.dim(),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum DriveMode {
    Jump(StepMethod),
    Qsd(DiffusionMethod),
}

fn prepare_engine(params: &EnsembleParams) -> Result<(LindbladModel, DriveMode)> {
    let model = params.model;
    Ok(match params.engine {
        Unraveling::EulerOrder1 => (model.clone(), DriveMode::Jump(StepMethod::EulerOrder1)),
        Unraveling::Rk4NonHermitian => {
            (model.clone(), DriveMode::Jump(StepMethod::Rk4NonHermitian))
        }
        Unraveling::WaitingTime => (model.clone(), DriveMode::Jump(StepMethod::WaitingTime)),
        Unraveling::ItoComplex => (model.clone(), DriveMode::Qsd(DiffusionMethod::ItoComplex)),
        Unraveling::ItoReal => (model.clone(), DriveMode::Qsd(DiffusionMethod::ItoReal)),
        Unraveling::FiniteMu { mu, scheme } => {
            let transformed = homodyne_channels(model, mu, scheme)?;
            warn_finite_mu_regime(model, mu, params.grid.dt());
            (transformed, DriveMode::Jump(StepMethod::EulerOrder1))
        }
    })
}

fn drive_one(
    model: &LindbladModel,
    mode: DriveMode,
    phi0: &StateVector,
    grid: &TimeGrid,
    delta_p_max: f64,
    rng: &mut TrajectoryRng,
    on_sample: &mut dyn FnMut(usize, f64, &Array1<Complex64>),
) -> Result<(Vec<JumpEvent>, Array1<Complex64>)> {
    match mode {
        DriveMode::Jump(StepMethod::WaitingTime) => {
            drive_waiting_time_trajectory(model, phi0, grid, rng, on_sample)
        }
        DriveMode::Jump(method) => {
            drive_jump_trajectory(model, phi0, grid, method, delta_p_max, rng, on_sample)
        }
        DriveMode::Qsd(method) => {
            let final_amps = drive_qsd_trajectory(model, phi0, grid, method, rng, on_sample)?;
            Ok((Vec::new(), final_amps))
        }
    }
}

/// Blockwise Welford accumulator over per-trajectory observable tables.
struct BlockStats {
    count: usize,
    mean: Array2<f64>,
    m2: Array2<f64>,
    jump_counts: Vec<u64>,
}

impl BlockStats {
    fn zeros(n_samples: usize, n_obs: usize, n_channels: usize) -> Self {
        BlockStats {
            count: 0,
            mean: Array2::zeros((n_samples, n_obs)),
            m2: Array2::zeros((n_samples, n_obs)),
            jump_counts: vec![0; n_channels],
        }
    }

    fn update(&mut self, table: &Array2<f64>) {
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        ndarray::Zip::from(&mut self.mean)
            .and(&mut self.m2)
            .and(table)
            .for_each(|mean, m2, &x| {
                let delta = x - *mean;
                *mean += delta * inv;
                *m2 += delta * (x - *mean);
            });
    }

    /// Chan's parallel variance merge.
    fn merge(mut a: BlockStats, b: BlockStats) -> BlockStats {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let (na, nb) = (a.count as f64, b.count as f64);
        let n = na + nb;
        ndarray::Zip::from(&mut a.mean)
            .and(&mut a.m2)
            .and(&b.mean)
            .and(&b.m2)
            .for_each(|mean_a, m2_a, &mean_b, &m2_b| {
                let delta = mean_b - *mean_a;
                *mean_a += delta * nb / n;
                *m2_a += m2_b + delta * delta * na * nb / n;
            });
        a.count += b.count;
        for (x, y) in a.jump_counts.iter_mut().zip(b.jump_counts.iter()) {
            *x += y;
        }
        a
    }
}

struct DensityPartial {
    count: usize,
    sums: Vec<Array2<Complex64>>,
}

impl DensityPartial {
    fn zeros(n_slots: usize, dim: usize) -> Self {
        DensityPartial {
            count: 0,
            sums: vec![Array2::zeros((dim, dim)); n_slots],
        }
    }

    fn merge(mut a: DensityPartial, b: DensityPartial) -> DensityPartial {
        for (x, y) in a.sums.iter_mut().zip(b.sums) {
            *x += &y;
        }
        a.count += b.count;
        a
    }
}

fn accumulate_projector(sum: &mut Array2<Complex64>, amps: &Array1<Complex64>) {
    let n = amps.len();
    for i in 0..n {
        for j in 0..n {
            sum[[i, j]] += amps[i] * amps[j].conj();
        }
    }
}

/// Reduce partials by merging adjacent pairs until one remains. The tree
/// shape depends only on the block count, keeping results independent of the
/// execution schedule.
fn pairwise_reduce<T>(mut items: Vec<T>, merge: fn(T, T) -> T) -> T {
    assert!(!items.is_empty());
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut iter = items.into_iter();
        while let Some(first) = iter.next() {
            match iter.next() {
                Some(second) => next.push(merge(first, second)),
                None => next.push(first),
            }
        }
        items = next;
    }
    items.into_iter().next().unwrap()
}

fn run_impl(
    params: &EnsembleParams,
    record_events: bool,
) -> Result<(EnsembleResult, Option<Vec<Vec<JumpEvent>>>)> {
    validate_params(params)?;
    let (engine_model, mode) = prepare_engine(params)?;
    let grid = params.grid;
    let n_samples = grid.n_samples();
    let n_obs = params.observables.len();
    let n_channels = engine_model.n_channels();
    let dim = params.model.dim();
    let n_blocks = params.n_traj.div_ceil(BLOCK);

    let blocks: Result<Vec<(BlockStats, Vec<Vec<JumpEvent>>)>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(params.n_traj);
            let mut stats = BlockStats::zeros(n_samples, n_obs, n_channels);
            let mut block_events = Vec::new();
            let mut table = Array2::zeros((n_samples, n_obs));
            let mut buf = Array1::zeros(dim);
            for traj in lo..hi {
                let mut rng = TrajectoryRng::substream(params.master_seed, traj as u64);
                let phi0 = sample_initial(params.mixture, &mut rng);
                {
                    let observables = params.observables;
                    let table = &mut table;
                    let buf = &mut buf;
                    let mut on_sample = |idx: usize, _t: f64, amps: &Array1<Complex64>| {
                        for (j, op) in observables.iter().enumerate() {
                            crate::linalg::matvec_into(op.entries(), amps, buf);
                            let val: Complex64 =
                                amps.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum();
                            table[[idx, j]] = val.re;
                        }
                    };
                    let (events, _) = drive_one(
                        &engine_model,
                        mode,
                        &phi0,
                        grid,
                        params.delta_p_max,
                        &mut rng,
                        &mut on_sample,
                    )?;
                    for event in &events {
                        stats.jump_counts[event.channel] += 1;
                    }
                    if record_events {
                        block_events.push(events);
                    }
                }
                stats.update(&table);
            }
            Ok((stats, block_events))
        })
        .collect();

    let blocks = blocks?;
    let mut stats_list = Vec::with_capacity(blocks.len());
    let mut events = if record_events {
        Some(Vec::new())
    } else {
        None
    };
    for (stats, block_events) in blocks {
        stats_list.push(stats);
        if let Some(all) = events.as_mut() {
            all.extend(block_events);
        }
    }
    let merged = pairwise_reduce(stats_list, BlockStats::merge);

    let n = merged.count as f64;
    let stderr = merged.m2.mapv(|m2| (m2 / (n - 1.0) / n).sqrt());
    let span = grid.span();
    let jump_rate_per_channel = merged
        .jump_counts
        .iter()
        .map(|&count| count as f64 / (n * span))
        .collect();

    Ok((
        EnsembleResult {
            times: grid.sample_times(),
            mean: merged.mean,
            stderr,
            n_traj: merged.count,
            jump_rate_per_channel,
        },
        events,
    ))
}
