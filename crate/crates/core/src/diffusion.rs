//! Diffusive unravelings: direct Euler-Maruyama integration of the
//! continuous Itô stochastic wave-function equation (complex-noise and
//! real-noise variants), and the finite-`mu` homodyne jump simulation whose
//! large-`mu` limit they are.
//!
//! Both Itô forms conserve the norm only to first order in `dt`, so every
//! step renormalizes explicitly.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::jump::{SeedInfo, StepMethod, TrajectoryRecord};
use crate::linalg::{c, matvec_into, DenseOperator, StateVector, NORM_TOL};
use crate::model::{homodyne_channels, stability_bound, HomodyneScheme, LindbladModel};
use crate::rng::TrajectoryRng;

/// Step guard: diffusion needs `dt * stability_bound <= QSD_DT_GUARD`.
pub const QSD_DT_GUARD: f64 = 0.01;

/// Which continuous unraveling to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionMethod {
    /// Complex Wiener noise, one independent complex increment per channel.
    ItoComplex,
    /// Real gaussian noise per channel (the homodyne-limit form).
    ItoReal,
}

/// Wiener increments for one step.
///
/// Complex mode: independent real and imaginary parts, each of variance
/// `dt`, independent across channels. Real mode: one real gaussian of
/// variance `dt` per channel.
#[derive(Debug, Clone)]
pub enum NoiseIncrement {
    Complex(Vec<Complex64>),
    Real(Vec<f64>),
}

impl NoiseIncrement {
    pub fn sample(
        method: DiffusionMethod,
        n_channels: usize,
        dt: f64,
        rng: &mut TrajectoryRng,
    ) -> Self {
        let sqrt_dt = dt.sqrt();
        match method {
            DiffusionMethod::ItoComplex => NoiseIncrement::Complex(
                (0..n_channels)
                    .map(|_| c(sqrt_dt * rng.gaussian(), sqrt_dt * rng.gaussian()))
                    .collect(),
            ),
            DiffusionMethod::ItoReal => {
                NoiseIncrement::Real((0..n_channels).map(|_| sqrt_dt * rng.gaussian()).collect())
            }
        }
    }

    pub fn zeros(method: DiffusionMethod, n_channels: usize) -> Self {
        match method {
            DiffusionMethod::ItoComplex => NoiseIncrement::Complex(vec![c(0.0, 0.0); n_channels]),
            DiffusionMethod::ItoReal => NoiseIncrement::Real(vec![0.0; n_channels]),
        }
    }
}

/// One Euler-Maruyama step of the chosen Itô equation, then explicit
/// renormalization. Errors when `dt * stability_bound` exceeds the guard or
/// the amplitudes stop being finite.
pub fn qsd_step(
    model: &LindbladModel,
    phi: &StateVector,
    dt: f64,
    method: DiffusionMethod,
    rng: &mut TrajectoryRng,
) -> Result<StateVector> {
    check_qsd_inputs(model, phi, dt)?;
    let mut prop = QsdPropagator::new(model, method, dt);
    let mut amps = phi.amplitudes().clone();
    prop.step(&mut amps, rng)?;
    Ok(StateVector::from_raw_normalized(amps))
}

/// [`qsd_step`] with caller-supplied Wiener increments. With all increments
/// zero this is the bare drift step; with zero jump operators it reduces to
/// a Schrodinger Euler step exactly.
pub fn qsd_step_with_noise(
    model: &LindbladModel,
    phi: &StateVector,
    dt: f64,
    method: DiffusionMethod,
    noise: &NoiseIncrement,
) -> Result<StateVector> {
    check_qsd_inputs(model, phi, dt)?;
    let mut prop = QsdPropagator::new(model, method, dt);
    let mut amps = phi.amplitudes().clone();
    prop.step_with_noise(&mut amps, noise)?;
    Ok(StateVector::from_raw_normalized(amps))
}

fn check_qsd_inputs(model: &LindbladModel, phi: &StateVector, dt: f64) -> Result<()> {
    let norm = phi.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    if phi.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: phi.dim(),
        });
    }
    check_dt_guard(model, dt)
}

fn check_dt_guard(model: &LindbladModel, dt: f64) -> Result<()> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let eta = stability_bound(model);
    if dt * eta > QSD_DT_GUARD {
        return Err(Error::InvalidParameter(format!(
            "dt * stability_bound = {:.3e} exceeds the diffusion guard {QSD_DT_GUARD}",
            dt * eta
        )));
    }
    Ok(())
}

/// Run one continuous trajectory; the jump record is empty by construction.
pub fn run_qsd_trajectory(
    model: &LindbladModel,
    phi0: &StateVector,
    grid: &TimeGrid,
    observables: &[DenseOperator],
    method: DiffusionMethod,
    rng: &mut TrajectoryRng,
) -> Result<TrajectoryRecord> {
    let dim = model.dim();
    for op in observables {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: op.dim(),
            });
        }
    }
    let times = grid.sample_times();
    let mut table = Array2::zeros((grid.n_samples(), observables.len()));
    let mut buf = Array1::zeros(dim);
    let final_amps = drive_qsd_trajectory(model, phi0, grid, method, rng, &mut |idx, _t, amps| {
        for (j, op) in observables.iter().enumerate() {
            matvec_into(op.entries(), amps, &mut buf);
            let val: Complex64 = amps.iter().zip(buf.iter()).map(|(a, b)| a.conj() * b).sum();
            table[[idx, j]] = val.re;
        }
    })?;
    let (master_seed, trajectory_index) = rng.seed_info();
    Ok(TrajectoryRecord {
        times,
        observable_values: table,
        jumps: Vec::new(),
        final_state: StateVector::from_raw_normalized(final_amps),
        seed_info: SeedInfo {
            master_seed,
            trajectory_index,
        },
        dt: grid.dt(),
    })
}

/// Finite-`mu` homodyne unraveling: delegates to the jump engine on the
/// channel set `D_{m,eps}` built by [`homodyne_channels`]. The jump record is
/// retained (many small jumps). Equivalence to the master equation is exact
/// for ANY `mu > 0`; outside the `mu^2 >> stability_bound` regime the run is
/// valid but far from the diffusive limit, so only warnings are emitted.
#[allow(clippy::too_many_arguments)]
pub fn finite_mu_run(
    model: &LindbladModel,
    phi0: &StateVector,
    grid: &TimeGrid,
    observables: &[DenseOperator],
    mu: f64,
    scheme: HomodyneScheme,
    delta_p_max: f64,
    rng: &mut TrajectoryRng,
) -> Result<TrajectoryRecord> {
    let transformed = homodyne_channels(model, mu, scheme)?;
    warn_finite_mu_regime(model, mu, grid.dt());
    crate::jump::run_trajectory(
        &transformed,
        phi0,
        grid,
        observables,
        StepMethod::EulerOrder1,
        delta_p_max,
        rng,
    )
}

pub(crate) fn warn_finite_mu_regime(model: &LindbladModel, mu: f64, dt: f64) {
    let eta = stability_bound(model);
    if mu * mu < 100.0 * eta {
        eprintln!(
            "warning: mu^2 = {:.3e} < 100 * stability_bound = {:.3e}; run is exact but far from the diffusive limit",
            mu * mu,
            100.0 * eta
        );
    }
    if dt > 0.05 / (mu * mu) {
        eprintln!(
            "warning: dt = {dt:.3e} exceeds 0.05/mu^2 = {:.3e}; per-step jump probability may trip the delta_p guard",
            0.05 / (mu * mu)
        );
    }
}

/// Windowed per-channel jump counts of one record.
#[derive(Debug, Clone)]
pub struct JumpCountStats {
    pub window: f64,
    pub n_windows: usize,
    /// `(n_windows, n_channels)` count matrix.
    pub counts: Array2<f64>,
    /// Per-channel mean count per window.
    pub mean: Vec<f64>,
    /// Per-channel sample variance of counts (ddof = 1).
    pub variance: Vec<f64>,
}

impl JumpCountStats {
    /// Mean and standard deviation over windows of
    /// `(N_{ch_plus} - N_{ch_minus}) / scale`.
    pub fn scaled_difference(&self, ch_plus: usize, ch_minus: usize, scale: f64) -> (f64, f64) {
        let diffs: Vec<f64> = (0..self.n_windows)
            .map(|w| (self.counts[[w, ch_plus]] - self.counts[[w, ch_minus]]) / scale)
            .collect();
        crate::stats::mean_std(&diffs)
    }
}

/// Bin the jump events of `record` into consecutive windows of length
/// `window` and report per-channel count statistics. Windows that would
/// extend past the end of the run are dropped.
pub fn jump_count_statistics(
    record: &TrajectoryRecord,
    n_channels: usize,
    window: f64,
) -> Result<JumpCountStats> {
    if window < record.dt {
        return Err(Error::InvalidParameter(format!(
            "window {window} is smaller than the run's dt {}",
            record.dt
        )));
    }
    let t_start = *record
        .times
        .first()
        .ok_or_else(|| Error::InvalidParameter("record has no sample times".into()))?;
    let t_end = *record.times.last().expect("nonempty checked above");
    let n_windows = ((t_end - t_start) / window).floor() as usize;
    if n_windows == 0 {
        return Err(Error::InvalidParameter(
            "window longer than the full record".into(),
        ));
    }
    let mut counts = Array2::zeros((n_windows, n_channels));
    for event in &record.jumps {
        if event.channel >= n_channels {
            return Err(Error::InvalidParameter(format!(
                "event channel {} out of range for {n_channels} channels",
                event.channel
            )));
        }
        let w = ((event.time - t_start) / window).floor() as usize;
        if w < n_windows {
            counts[[w, event.channel]] += 1.0;
        }
    }
    let mut mean = Vec::with_capacity(n_channels);
    let mut variance = Vec::with_capacity(n_channels);
    for ch in 0..n_channels {
        let col: Vec<f64> = (0..n_windows).map(|w| counts[[w, ch]]).collect();
        let (m, s) = crate::stats::mean_std(&col);
        mean.push(m);
        variance.push(s * s);
    }
    Ok(JumpCountStats {
        window,
        n_windows,
        counts,
        mean,
        variance,
    })
}

/// Reusable stepping state for one diffusive trajectory.
pub(crate) struct QsdPropagator<'m> {
    h_s: &'m Array2<Complex64>,
    jump_ops: &'m [DenseOperator],
    daggers: Vec<Array2<Complex64>>,
    method: DiffusionMethod,
    dt: f64,
    cphi: Array1<Complex64>,
    cdag_cphi: Array1<Complex64>,
    dphi: Array1<Complex64>,
    hphi: Array1<Complex64>,
    noise_c: Vec<Complex64>,
    noise_r: Vec<f64>,
}

impl<'m> QsdPropagator<'m> {
    pub(crate) fn new(model: &'m LindbladModel, method: DiffusionMethod, dt: f64) -> Self {
        let dim = model.dim();
        let m = model.n_channels();
        QsdPropagator {
            h_s: model.hamiltonian().entries(),
            jump_ops: model.jump_ops(),
            daggers: model
                .jump_ops()
                .iter()
                .map(|op| op.dagger().entries().clone())
                .collect(),
            method,
            dt,
            cphi: Array1::zeros(dim),
            cdag_cphi: Array1::zeros(dim),
            dphi: Array1::zeros(dim),
            hphi: Array1::zeros(dim),
            noise_c: vec![c(0.0, 0.0); m],
            noise_r: vec![0.0; m],
        }
    }

    pub(crate) fn step(
        &mut self,
        phi: &mut Array1<Complex64>,
        rng: &mut TrajectoryRng,
    ) -> Result<()> {
        let sqrt_dt = self.dt.sqrt();
        match self.method {
            DiffusionMethod::ItoComplex => {
                for z in &mut self.noise_c {
                    *z = c(sqrt_dt * rng.gaussian(), sqrt_dt * rng.gaussian());
                }
                self.step_core(phi, true)
            }
            DiffusionMethod::ItoReal => {
                for z in &mut self.noise_r {
                    *z = sqrt_dt * rng.gaussian();
                }
                self.step_core(phi, false)
            }
        }
    }

    /// Euler-Maruyama update with the supplied increments, then
    /// renormalization. Exposed so tests can drive the deterministic
    /// (zero-noise) part directly.
    pub(crate) fn step_with_noise(
        &mut self,
        phi: &mut Array1<Complex64>,
        noise: &NoiseIncrement,
    ) -> Result<()> {
        match (self.method, noise) {
            (DiffusionMethod::ItoComplex, NoiseIncrement::Complex(xi)) => {
                if xi.len() != self.jump_ops.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.jump_ops.len(),
                        got: xi.len(),
                    });
                }
                self.noise_c.copy_from_slice(xi);
                self.step_core(phi, true)
            }
            (DiffusionMethod::ItoReal, NoiseIncrement::Real(zeta)) => {
                if zeta.len() != self.jump_ops.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.jump_ops.len(),
                        got: zeta.len(),
                    });
                }
                self.noise_r.copy_from_slice(zeta);
                self.step_core(phi, false)
            }
            _ => Err(Error::InvalidParameter(
                "noise increment kind does not match the diffusion method".into(),
            )),
        }
    }

    fn step_core(&mut self, phi: &mut Array1<Complex64>, complex_noise: bool) -> Result<()> {
        let dt = c(self.dt, 0.0);

        // coherent part: -i H_S phi dt
        matvec_into(self.h_s, phi, &mut self.hphi);
        let minus_i_dt = c(0.0, -self.dt);
        for (d, h) in self.dphi.iter_mut().zip(self.hphi.iter()) {
            *d = minus_i_dt * h;
        }

        for (m, op) in self.jump_ops.iter().enumerate() {
            matvec_into(op.entries(), phi, &mut self.cphi);
            matvec_into(&self.daggers[m], &self.cphi, &mut self.cdag_cphi);
            let exp_c: Complex64 = phi
                .iter()
                .zip(self.cphi.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();

            if complex_noise {
                // drift: (<C^dag> C - C^dag C / 2 - <C^dag><C> / 2) phi dt
                let exp_cdag = exp_c.conj();
                let half = c(0.5, 0.0);
                let scal = exp_cdag * exp_c * half;
                // noise: (C - <C>) phi d xi / sqrt(2)
                let w = self.noise_c[m] / c(std::f64::consts::SQRT_2, 0.0);
                for i in 0..phi.len() {
                    self.dphi[i] += dt
                        * (exp_cdag * self.cphi[i] - half * self.cdag_cphi[i] - scal * phi[i])
                        + w * (self.cphi[i] - exp_c * phi[i]);
                }
            } else {
                // drift: (1/2)(<C + C^dag> C - C^dag C - <C + C^dag>^2/4) phi dt
                let b = 2.0 * exp_c.re;
                let half = c(0.5, 0.0);
                let quarter_b2 = c(0.25 * b * b, 0.0);
                let bc = c(b, 0.0);
                // noise: (1/2)(2 C - <C + C^dag>) phi d zeta
                let w = c(0.5 * self.noise_r[m], 0.0);
                for i in 0..phi.len() {
                    self.dphi[i] +=
                        dt * half * (bc * self.cphi[i] - self.cdag_cphi[i] - quarter_b2 * phi[i])
                            + w * (self.cphi[i] * 2.0 - bc * phi[i]);
                }
            }
        }

        let mut norm_sqr = 0.0;
        for (p, d) in phi.iter_mut().zip(self.dphi.iter()) {
            *p += d;
            norm_sqr += p.norm_sqr();
        }
        if !norm_sqr.is_finite() || norm_sqr < 1e-28 {
            return Err(Error::NonFinite);
        }
        let inv = c(1.0 / norm_sqr.sqrt(), 0.0);
        phi.mapv_inplace(|z| z * inv);
        Ok(())
    }
}

/// Core diffusive trajectory loop shared with the ensemble runner.
pub(crate) fn drive_qsd_trajectory(
    model: &LindbladModel,
    phi0: &StateVector,
    grid: &TimeGrid,
    method: DiffusionMethod,
    rng: &mut TrajectoryRng,
    on_sample: &mut dyn FnMut(usize, f64, &Array1<Complex64>),
) -> Result<Array1<Complex64>> {
    let norm = phi0.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    if phi0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: phi0.dim(),
        });
    }
    check_dt_guard(model, grid.dt())?;

    let mut prop = QsdPropagator::new(model, method, grid.dt());
    let mut phi = phi0.amplitudes().clone();

    let mut sample_idx = 0;
    on_sample(sample_idx, grid.time_at(0), &phi);
    sample_idx += 1;

    for step in 1..=grid.n_steps() {
        prop.step(&mut phi, rng)?;
        if grid.is_sample_step(step) {
            on_sample(sample_idx, grid.time_at(step), &phi);
            sample_idx += 1;
        }
    }
    Ok(phi)
}
