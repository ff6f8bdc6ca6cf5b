//! Monte-Carlo wave-function propagation: non-Hermitian evolution of the
//! state, randomly decided quantum jumps into the channel directions, and
//! renormalization — plus the waiting-time variant where one uniform draw
//! fixes each jump time through the decay of the unnormalized norm.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{c, l2_norm, l2_norm_sqr, matvec_into, DenseOperator, StateVector, NORM_TOL};
use crate::model::{effective_hamiltonian, stability_bound, LindbladModel};
use crate::rng::TrajectoryRng;

/// Default ceiling on the per-step jump probability; steps whose total
/// `delta_p` exceeds it are rejected with an error.
pub const DEFAULT_DELTA_P_MAX: f64 = 0.1;

/// Largest step keeping `dt * stability_bound` at the 0.05 safety level.
/// Returns infinity for models with a vanishing bound (nothing evolves).
pub fn suggest_dt(model: &LindbladModel) -> f64 {
    let eta = stability_bound(model);
    if eta > 0.0 {
        0.05 / eta
    } else {
        f64::INFINITY
    }
}

/// Propagation scheme for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    /// First-order no-jump propagation `(1 - i H dt)|phi>`.
    EulerOrder1,
    /// Fourth-order Runge-Kutta on `d phi/dt = -i H phi`.
    Rk4NonHermitian,
    /// Unnormalized propagation with jump times located where the norm
    /// crosses a single uniform draw.
    WaitingTime,
}

/// One quantum jump: absolute time and the index of the channel taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: usize,
}

/// Provenance of a stochastic trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub trajectory_index: u64,
}

/// One stochastic realization: sampled observable values, the jump record,
/// and the final normalized state.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// One row per sample time, one column per observable.
    pub observable_values: Array2<f64>,
    /// Sorted by time (steps are visited in order).
    pub jumps: Vec<JumpEvent>,
    pub final_state: StateVector,
    pub seed_info: SeedInfo,
    /// Integration step of the run that produced this record.
    pub dt: f64,
}

/// Per-channel jump probabilities `delta_p_m = dt <phi|C_m^dag C_m|phi>`
/// evaluated as `dt ||C_m phi||^2` (nonnegative by construction).
pub fn jump_probabilities(model: &LindbladModel, phi: &StateVector, dt: f64) -> Result<Vec<f64>> {
    check_normalized(phi)?;
    if phi.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: phi.dim(),
        });
    }
    let mut buf = Array1::zeros(model.dim());
    Ok(model
        .jump_ops()
        .iter()
        .map(|op| {
            gemv(op.entries(), phi.amplitudes(), &mut buf);
            dt * l2_norm_sqr(&buf)
        })
        .collect())
}

/// One step of the two-part procedure: evaluate the jump probabilities at
/// the current state, draw one uniform, then either jump into a channel
/// direction or propagate with the non-Hermitian Hamiltonian and
/// renormalize. Returns the new state and the jump event, if any, stamped
/// at the end of the interval `t + dt`.
pub fn mcwf_step(
    model: &LindbladModel,
    phi: &StateVector,
    t: f64,
    dt: f64,
    method: StepMethod,
    delta_p_max: f64,
    rng: &mut TrajectoryRng,
) -> Result<(StateVector, Option<JumpEvent>)> {
    check_normalized(phi)?;
    let mut prop = JumpPropagator::new(model, method, dt, delta_p_max)?;
    let mut amps = phi.amplitudes().clone();
    let channel = prop.step(&mut amps, rng)?;
    let state = StateVector::from_raw_normalized(amps);
    Ok((
        state,
        channel.map(|channel| JumpEvent {
            time: t + dt,
            channel,
        }),
    ))
}

/// Run one trajectory over the grid, recording `<phi|A|phi>` for each
/// observable at every sample step. `StepMethod::WaitingTime` dispatches to
/// [`waiting_time_trajectory`].
pub fn run_trajectory(
    model: &LindbladModel,
    phi0: &StateVector,
    grid: &TimeGrid,
    observables: &[DenseOperator],
    method: StepMethod,
    delta_p_max: f64,
    rng: &mut TrajectoryRng,
) -> Result<TrajectoryRecord> {
    if method == StepMethod::WaitingTime {
        return waiting_time_trajectory(model, phi0, grid, observables, rng);
    }
    let mut recorder = ObservableRecorder::new(model.dim(), grid, observables)?;
    let (jumps, final_amps) = drive_jump_trajectory(
        model,
        phi0,
        grid,
        method,
        delta_p_max,
        rng,
        &mut |idx, _t, amps| recorder.record(idx, amps),
    )?;
    Ok(recorder.into_record(jumps, final_amps, rng, grid.dt()))
}

/// Waiting-time trajectory: between jumps the state evolves unnormalized
/// under the non-Hermitian Hamiltonian (RK4) while its squared norm decays;
/// a jump fires where the norm crosses a single uniform draw `r`, located by
/// bisection within the step to `dt * 1e-3`.
pub fn waiting_time_trajectory(
    model: &LindbladModel,
    phi0: &StateVector,
    grid: &TimeGrid,
    observables: &[DenseOperator],
    rng: &mut TrajectoryRng,
) -> Result<TrajectoryRecord> {
    let mut recorder = ObservableRecorder::new(model.dim(), grid, observables)?;
    let (jumps, final_amps) =
        drive_waiting_time_trajectory(model, phi0, grid, rng, &mut |idx, _t, amps| {
            recorder.record(idx, amps)
        })?;
    Ok(recorder.into_record(jumps, final_amps, rng, grid.dt()))
}

#[inline]
fn gemv(a: &Array2<Complex64>, x: &Array1<Complex64>, y: &mut Array1<Complex64>) {
    matvec_into(a, x, y);
}

fn check_normalized(phi: &StateVector) -> Result<()> {
    let norm = phi.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// Reusable stepping state for one trajectory: the effective Hamiltonian
/// and scratch buffers, so the hot loop performs no allocations.
pub(crate) struct JumpPropagator<'m> {
    model: &'m LindbladModel,
    h_eff: Array2<Complex64>,
    method: StepMethod,
    dt: f64,
    delta_p_max: f64,
    probs: Vec<f64>,
    k1: Array1<Complex64>,
    k2: Array1<Complex64>,
    k3: Array1<Complex64>,
    k4: Array1<Complex64>,
    arg: Array1<Complex64>,
    cbuf: Array1<Complex64>,
}

impl<'m> JumpPropagator<'m> {
    pub(crate) fn new(
        model: &'m LindbladModel,
        method: StepMethod,
        dt: f64,
        delta_p_max: f64,
    ) -> Result<Self> {
        if method == StepMethod::WaitingTime {
            return Err(Error::InvalidParameter(
                "waiting_time has no single-step form; use waiting_time_trajectory".into(),
            ));
        }
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if delta_p_max.is_nan() || delta_p_max <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta_p_max must be > 0, got {delta_p_max}"
            )));
        }
        let dim = model.dim();
        Ok(JumpPropagator {
            model,
            h_eff: effective_hamiltonian(model).entries().clone(),
            method,
            dt,
            delta_p_max,
            probs: vec![0.0; model.n_channels()],
            k1: Array1::zeros(dim),
            k2: Array1::zeros(dim),
            k3: Array1::zeros(dim),
            k4: Array1::zeros(dim),
            arg: Array1::zeros(dim),
            cbuf: Array1::zeros(dim),
        })
    }

    /// Advance `phi` (normalized, modified in place) by one step; returns the
    /// selected channel when a jump occurred.
    pub(crate) fn step(
        &mut self,
        phi: &mut Array1<Complex64>,
        rng: &mut TrajectoryRng,
    ) -> Result<Option<usize>> {
        // jump probabilities at the step's initial state
        let mut delta_p = 0.0;
        for (m, op) in self.model.jump_ops().iter().enumerate() {
            gemv(op.entries(), phi, &mut self.cbuf);
            self.probs[m] = self.dt * l2_norm_sqr(&self.cbuf);
            delta_p += self.probs[m];
        }
        if delta_p > self.delta_p_max {
            return Err(Error::StepTooLarge {
                delta_p,
                max: self.delta_p_max,
            });
        }

        let u = rng.uniform();
        if u < delta_p {
            // jump: first channel whose cumulative probability exceeds u
            let mut acc = 0.0;
            let mut channel = self.model.n_channels() - 1;
            for (m, &p) in self.probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    channel = m;
                    break;
                }
            }
            gemv(
                self.model.jump_ops()[channel].entries(),
                phi,
                &mut self.cbuf,
            );
            let norm = l2_norm(&self.cbuf);
            if norm < 1e-14 {
                return Err(Error::ZeroNormJump { channel, norm });
            }
            let inv = c(1.0 / norm, 0.0);
            phi.zip_mut_with(&self.cbuf, |p, b| *p = *b * inv);
            Ok(Some(channel))
        } else {
            self.propagate_no_jump(phi);
            let norm = l2_norm(phi);
            let inv = c(1.0 / norm, 0.0);
            phi.mapv_inplace(|z| z * inv);
            Ok(None)
        }
    }

    /// Non-Hermitian propagation of `phi` by `dt` without renormalization.
    fn propagate_no_jump(&mut self, phi: &mut Array1<Complex64>) {
        match self.method {
            StepMethod::EulerOrder1 => {
                gemv(&self.h_eff, phi, &mut self.k1);
                let factor = c(0.0, -self.dt);
                phi.zip_mut_with(&self.k1, |p, k| *p += factor * k);
            }
            StepMethod::Rk4NonHermitian => {
                rk4_nonhermitian(
                    &self.h_eff,
                    phi,
                    self.dt,
                    &mut self.k1,
                    &mut self.k2,
                    &mut self.k3,
                    &mut self.k4,
                    &mut self.arg,
                );
            }
            StepMethod::WaitingTime => unreachable!("rejected at construction"),
        }
    }
}

/// RK4 for `d phi/dt = -i H phi`, in place.
#[allow(clippy::too_many_arguments)]
fn rk4_nonhermitian(
    h: &Array2<Complex64>,
    phi: &mut Array1<Complex64>,
    dt: f64,
    k1: &mut Array1<Complex64>,
    k2: &mut Array1<Complex64>,
    k3: &mut Array1<Complex64>,
    k4: &mut Array1<Complex64>,
    arg: &mut Array1<Complex64>,
) {
    let minus_i = c(0.0, -1.0);
    let half = c(0.5 * dt, 0.0);
    let full = c(dt, 0.0);

    gemv(h, phi, k1);
    k1.mapv_inplace(|z| z * minus_i);

    arg.assign(phi);
    arg.zip_mut_with(k1, |a, k| *a += half * k);
    gemv(h, arg, k2);
    k2.mapv_inplace(|z| z * minus_i);

    arg.assign(phi);
    arg.zip_mut_with(k2, |a, k| *a += half * k);
    gemv(h, arg, k3);
    k3.mapv_inplace(|z| z * minus_i);

    arg.assign(phi);
    arg.zip_mut_with(k3, |a, k| *a += full * k);
    gemv(h, arg, k4);
    k4.mapv_inplace(|z| z * minus_i);

    let w = c(dt / 6.0, 0.0);
    for i in 0..phi.len() {
        phi[i] += w * (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]);
    }
}

/// Records observable expectations into a table as samples arrive.
struct ObservableRecorder<'o> {
    grid_times: Vec<f64>,
    observables: &'o [DenseOperator],
    table: Array2<f64>,
    buf: Array1<Complex64>,
}

impl<'o> ObservableRecorder<'o> {
    fn new(dim: usize, grid: &TimeGrid, observables: &'o [DenseOperator]) -> Result<Self> {
        for op in observables {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
        }
        Ok(ObservableRecorder {
            grid_times: grid.sample_times(),
            observables,
            table: Array2::zeros((grid.n_samples(), observables.len())),
            buf: Array1::zeros(dim),
        })
    }

    fn record(&mut self, idx: usize, amps: &Array1<Complex64>) {
        for (j, op) in self.observables.iter().enumerate() {
            gemv(op.entries(), amps, &mut self.buf);
            let val: Complex64 = amps
                .iter()
                .zip(self.buf.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            self.table[[idx, j]] = val.re;
        }
    }

    fn into_record(
        self,
        jumps: Vec<JumpEvent>,
        final_amps: Array1<Complex64>,
        rng: &TrajectoryRng,
        dt: f64,
    ) -> TrajectoryRecord {
        let (master_seed, trajectory_index) = rng.seed_info();
        TrajectoryRecord {
            times: self.grid_times,
            observable_values: self.table,
            jumps,
            final_state: StateVector::from_raw_normalized(final_amps),
            seed_info: SeedInfo {
                master_seed,
                trajectory_index,
            },
            dt,
        }
    }
}

/// Core trajectory loop shared by the public API and the ensemble runner.
/// `on_sample(sample_idx, time, amplitudes)` sees the normalized state.
pub(crate) fn drive_jump_trajectory(
    model: &LindbladModel,
    phi0: &StateVector,
    grid: &TimeGrid,
    method: StepMethod,
    delta_p_max: f64,
    rng: &mut TrajectoryRng,
    on_sample: &mut dyn FnMut(usize, f64, &Array1<Complex64>),
) -> Result<(Vec<JumpEvent>, Array1<Complex64>)> {
    check_normalized(phi0)?;
    if phi0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: phi0.dim(),
        });
    }
    let mut prop = JumpPropagator::new(model, method, grid.dt(), delta_p_max)?;
    let mut phi = phi0.amplitudes().clone();
    let mut jumps = Vec::new();

    let mut sample_idx = 0;
    on_sample(sample_idx, grid.time_at(0), &phi);
    sample_idx += 1;

    for step in 1..=grid.n_steps() {
        if let Some(channel) = prop.step(&mut phi, rng)? {
            jumps.push(JumpEvent {
                time: grid.time_at(step),
                channel,
            });
        }
        if grid.is_sample_step(step) {
            on_sample(sample_idx, grid.time_at(step), &phi);
            sample_idx += 1;
        }
    }
    Ok((jumps, phi))
}

/// Waiting-time trajectory loop; see [`waiting_time_trajectory`].
pub(crate) fn drive_waiting_time_trajectory(
    model: &LindbladModel,
    phi0: &StateVector,
    grid: &TimeGrid,
    rng: &mut TrajectoryRng,
    on_sample: &mut dyn FnMut(usize, f64, &Array1<Complex64>),
) -> Result<(Vec<JumpEvent>, Array1<Complex64>)> {
    check_normalized(phi0)?;
    if phi0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: phi0.dim(),
        });
    }
    let dim = model.dim();
    let dt = grid.dt();
    let h_eff = effective_hamiltonian(model).entries().clone();
    let mut k1 = Array1::zeros(dim);
    let mut k2 = Array1::zeros(dim);
    let mut k3 = Array1::zeros(dim);
    let mut k4 = Array1::zeros(dim);
    let mut arg = Array1::zeros(dim);
    let mut cbuf = Array1::zeros(dim);
    let mut trial = Array1::zeros(dim);
    let mut seg_start: Array1<Complex64> = Array1::zeros(dim);
    let mut normalized = Array1::zeros(dim);

    // phi is unnormalized between jumps; its squared norm relative to the
    // last jump (where it was reset to 1) is the survival probability.
    let mut phi = phi0.amplitudes().clone();
    let mut r = rng.uniform();
    let mut jumps = Vec::new();
    let bisect_tol = dt * 1e-3;

    let mut sample_idx = 0;
    on_sample(sample_idx, grid.time_at(0), &phi);
    sample_idx += 1;

    for step in 1..=grid.n_steps() {
        let t0 = grid.time_at(step - 1);
        seg_start.assign(&phi);
        let norm_before = l2_norm_sqr(&seg_start);

        rk4_nonhermitian(
            &h_eff, &mut phi, dt, &mut k1, &mut k2, &mut k3, &mut k4, &mut arg,
        );
        let norm_after = l2_norm_sqr(&phi);
        if norm_after > norm_before * (1.0 + 1e-10) {
            return Err(Error::NormIncreased {
                from: norm_before.sqrt(),
                to: norm_after.sqrt(),
            });
        }

        // handle (possibly several) crossings of the survival threshold
        let mut seg_offset = 0.0;
        while l2_norm_sqr(&phi) < r {
            // bisect the crossing time in (seg_offset, dt]
            let mut lo = 0.0f64;
            let mut hi = dt - seg_offset;
            while hi - lo > bisect_tol {
                let mid = 0.5 * (lo + hi);
                trial.assign(&seg_start);
                rk4_nonhermitian(
                    &h_eff, &mut trial, mid, &mut k1, &mut k2, &mut k3, &mut k4, &mut arg,
                );
                if l2_norm_sqr(&trial) < r {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            trial.assign(&seg_start);
            rk4_nonhermitian(
                &h_eff, &mut trial, hi, &mut k1, &mut k2, &mut k3, &mut k4, &mut arg,
            );

            // channel with probability proportional to ||C_m phi(t*)||^2
            let mut weights = vec![0.0; model.n_channels()];
            let mut total = 0.0;
            for (m, op) in model.jump_ops().iter().enumerate() {
                gemv(op.entries(), &trial, &mut cbuf);
                weights[m] = l2_norm_sqr(&cbuf);
                total += weights[m];
            }
            if total < 1e-28 {
                return Err(Error::ZeroNormJump {
                    channel: 0,
                    norm: total.sqrt(),
                });
            }
            let draw = rng.uniform() * total;
            let mut acc = 0.0;
            let mut channel = model.n_channels() - 1;
            for (m, &w) in weights.iter().enumerate() {
                acc += w;
                if draw < acc {
                    channel = m;
                    break;
                }
            }
            gemv(model.jump_ops()[channel].entries(), &trial, &mut cbuf);
            let norm = l2_norm(&cbuf);
            if norm < 1e-14 {
                return Err(Error::ZeroNormJump { channel, norm });
            }
            jumps.push(JumpEvent {
                time: t0 + seg_offset + hi,
                channel,
            });

            // reset: normalized post-jump state, fresh survival draw
            let inv = c(1.0 / norm, 0.0);
            seg_start.zip_mut_with(&cbuf, |s, b| *s = *b * inv);
            r = rng.uniform();
            seg_offset += hi;

            let remaining = dt - seg_offset;
            if remaining > 1e-15 * dt.max(1.0) {
                phi.assign(&seg_start);
                rk4_nonhermitian(
                    &h_eff, &mut phi, remaining, &mut k1, &mut k2, &mut k3, &mut k4, &mut arg,
                );
            } else {
                phi.assign(&seg_start);
                break;
            }
        }

        if grid.is_sample_step(step) {
            let norm = l2_norm(&phi);
            let inv = c(1.0 / norm, 0.0);
            normalized.assign(&phi);
            normalized.mapv_inplace(|z| z * inv);
            on_sample(sample_idx, grid.time_at(step), &normalized);
            sample_idx += 1;
        }
    }

    let norm = l2_norm(&phi);
    let inv = c(1.0 / norm, 0.0);
    phi.mapv_inplace(|z| z * inv);
    Ok((jumps, phi))
}
