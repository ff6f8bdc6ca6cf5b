//! Built-in validation suites, runnable from the CLI:
//!
//! * `identities`  — channel-set identities, unfolding invariance and the
//!   two-level relaxation rates (pure algebra plus tiny integrations).
//! * `oracle_small` — trajectory-vs-master-equation equivalence on the
//!   two-level atom and a small damped cavity.
//! * `statistics` — noise covariances, homodyne jump-count statistics and
//!   the N-vs-N^2 state-memory scaling report.
//!
//! `scale` shrinks the sample sizes; statistical tolerances widen as
//! `1/sqrt(scale)` so reduced runs report wider confidence intervals instead
//! of failing.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use mcwf::diffusion::{finite_mu_run, jump_count_statistics, DiffusionMethod, NoiseIncrement};
use mcwf::ensemble::{mean_density, run_ensemble, EnsembleParams, InitialMixture, Unraveling};
use mcwf::jump::{run_trajectory, StepMethod};
use mcwf::master::{me_evolve, me_step_rk4};
use mcwf::model::{
    effective_hamiltonian, homodyne_channels, lindblad_rhs, unfold_transform, HomodyneScheme,
};
use mcwf::presets::{damped_cavity_model, two_level_model, CavityParams, TwoLevelParams};
use mcwf::rng::TrajectoryRng;
use mcwf::stats::{fit_exponential_rate, ks_statistic};
use mcwf::{DenseOperator, DensityMatrix, LindbladModel, StateVector, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Identities,
    OracleSmall,
    Statistics,
}

impl SuiteKind {
    pub fn parse(name: &str) -> Option<SuiteKind> {
        match name {
            "identities" => Some(SuiteKind::Identities),
            "oracle_small" => Some(SuiteKind::OracleSmall),
            "statistics" => Some(SuiteKind::Statistics),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SuiteKind::Identities => "identities",
            SuiteKind::OracleSmall => "oracle_small",
            SuiteKind::Statistics => "statistics",
        }
    }
}

/// One validation check: passes when `|measured - expected| <= tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            measured,
            expected,
            tolerance,
            passed: (measured - expected).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub scale: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn run_suite(suite: SuiteKind, scale: f64) -> Report {
    let checks = match suite {
        SuiteKind::Identities => identities_checks(),
        SuiteKind::OracleSmall => oracle_small_checks(scale),
        SuiteKind::Statistics => statistics_checks(scale),
    };
    let passed = checks.iter().all(|c| c.passed);
    Report {
        suite: suite.name().to_string(),
        scale,
        checks,
        passed,
    }
}

fn rabi_model() -> LindbladModel {
    two_level_model(&TwoLevelParams {
        gamma: 1.0,
        rabi: 3.0,
        detuning: 0.0,
    })
    .unwrap()
}

fn random_hermitian(dim: usize, rng: &mut TrajectoryRng) -> Array2<Complex64> {
    let mut m: Array2<Complex64> = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            m[[i, j]] = Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5);
        }
    }
    (&m + &m.t().mapv(|z| z.conj())).mapv(|z| z * 0.5)
}

/// A small random model: Hermitian Hamiltonian and two random channels.
fn random_model(dim: usize, seed: u64) -> LindbladModel {
    let mut rng = TrajectoryRng::substream(seed, 0);
    let h = DenseOperator::from_matrix(random_hermitian(dim, &mut rng)).unwrap();
    let channel = |rng: &mut TrajectoryRng| {
        let mut m: Array2<Complex64> = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                m[[i, j]] = Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5);
            }
        }
        DenseOperator::from_matrix(m).unwrap()
    };
    let c1 = channel(&mut rng);
    let c2 = channel(&mut rng);
    LindbladModel::new(h, vec![c1, c2]).unwrap()
}

/// Largest entrywise deviation between the relaxation action of two channel
/// sets over 20 seeded random Hermitian matrices.
fn max_rhs_deviation(a: &LindbladModel, b: &LindbladModel, seed: u64) -> f64 {
    let mut rng = TrajectoryRng::substream(seed, 0);
    let mut max_dev = 0.0f64;
    for _ in 0..20 {
        let rho = random_hermitian(a.dim(), &mut rng);
        let ra = lindblad_rhs(a, &rho).unwrap();
        let rb = lindblad_rhs(b, &rho).unwrap();
        let dev = (&ra - &rb).iter().map(|z| z.norm()).fold(0.0, f64::max);
        max_dev = max_dev.max(dev);
    }
    max_dev
}

fn identities_checks() -> Vec<Check> {
    let mut checks = Vec::new();

    // channel identities on the driven two-level atom and on a random model
    let models: [(&str, LindbladModel); 2] = [
        ("two-level", rabi_model()),
        ("random dim-4", random_model(4, 12345)),
    ];
    for (label, model) in &models {
        let two = homodyne_channels(model, 10.0, HomodyneScheme::TwoPhase).unwrap();
        checks.push(Check::new(
            format!("two_phase channel identity ({label})"),
            max_rhs_deviation(model, &two, 17),
            0.0,
            1e-9,
        ));
        let four = homodyne_channels(model, 5.0, HomodyneScheme::FourPhase).unwrap();
        checks.push(Check::new(
            format!("four_phase channel identity ({label})"),
            max_rhs_deviation(model, &four, 18),
            0.0,
            1e-9,
        ));
    }

    // unfolding freedom: Hadamard split and a random 2x2 unitary
    let base = rabi_model();
    let two_channel = LindbladModel::new(
        base.hamiltonian().clone(),
        vec![base.jump_ops()[0].clone(), DenseOperator::zeros(2)],
    )
    .unwrap();
    let s = 1.0 / std::f64::consts::SQRT_2;
    let hadamard = Array2::from_shape_vec(
        (2, 2),
        vec![
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ],
    )
    .unwrap();
    checks.push(Check::new(
        "unfold invariance (Hadamard split)",
        max_rhs_deviation(
            &two_channel,
            &unfold_transform(&two_channel, &hadamard).unwrap(),
            19,
        ),
        0.0,
        1e-9,
    ));
    let unitary = random_unitary_2x2(777);
    checks.push(Check::new(
        "unfold invariance (random unitary)",
        max_rhs_deviation(
            &two_channel,
            &unfold_transform(&two_channel, &unitary).unwrap(),
            20,
        ),
        0.0,
        1e-9,
    ));

    // sum rule: sum_eps D^dag D = mu^2 1 + C^dag C
    let model = rabi_model();
    let mu = 10.0;
    let hm = homodyne_channels(&model, mu, HomodyneScheme::TwoPhase).unwrap();
    let mut sum: Array2<Complex64> = Array2::zeros((2, 2));
    for d in hm.jump_ops() {
        sum = sum + d.dagger().entries().dot(d.entries());
    }
    let c1 = &model.jump_ops()[0];
    let eye: Array2<Complex64> = Array2::eye(2);
    let expected =
        eye.mapv(|z| z * Complex64::new(mu * mu, 0.0)) + c1.dagger().entries().dot(c1.entries());
    checks.push(Check::new(
        "sum rule: sum_eps D^dag D = mu^2 + C^dag C",
        (&sum - &expected)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        0.0,
        1e-12,
    ));

    // dissipative part of the effective Hamiltonian is PSD
    let h = effective_hamiltonian(&random_model(4, 54321));
    let psd = h.sub(&h.dagger()).scale(Complex64::new(0.0, 1.0));
    let min_eig = psd
        .hermitian_eigenvalues()
        .first()
        .copied()
        .unwrap_or(0.0)
        .min(0.0);
    checks.push(Check::new(
        "i(H - H^dag) positive semidefinite (min eigenvalue, clamped)",
        min_eig,
        0.0,
        1e-10,
    ));

    // two-level relaxation rates: populations at Gamma, coherences at Gamma/2
    let gamma = 1.0;
    let decay = two_level_model(&TwoLevelParams {
        gamma,
        rabi: 0.0,
        detuning: 0.0,
    })
    .unwrap();
    let mut m: Array2<Complex64> = Array2::zeros((2, 2));
    m[[0, 0]] = Complex64::new(0.6, 0.0);
    m[[1, 1]] = Complex64::new(0.4, 0.0);
    m[[0, 1]] = Complex64::new(0.3, 0.1);
    m[[1, 0]] = Complex64::new(0.3, -0.1);
    let rho0 = DensityMatrix::new(m).unwrap();
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 100).unwrap();
    let (trace, _) = me_evolve(&decay, &rho0, &grid, &[]).unwrap();
    let pops: Vec<f64> = trace
        .states
        .iter()
        .map(|r| r.entries()[[0, 0]].re)
        .collect();
    let cohs: Vec<f64> = trace
        .states
        .iter()
        .map(|r| r.entries()[[0, 1]].norm())
        .collect();
    let rate_pop = fit_exponential_rate(&trace.times, &pops).unwrap();
    let rate_coh = fit_exponential_rate(&trace.times, &cohs).unwrap();
    checks.push(Check::new(
        "population relaxation rate / Gamma",
        rate_pop / gamma,
        1.0,
        1e-6,
    ));
    checks.push(Check::new(
        "coherence relaxation rate / (Gamma/2)",
        rate_coh / (gamma / 2.0),
        1.0,
        1e-6,
    ));

    checks
}

fn random_unitary_2x2(seed: u64) -> Array2<Complex64> {
    let mut rng = TrajectoryRng::substream(seed, 0);
    let mut a = Array1::from(vec![
        Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5),
        Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5),
    ]);
    let norm_a = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    a.mapv_inplace(|z| z / norm_a);
    // second column: orthogonal complement (-b1*, a0*) of (a0, a1)
    let b = Array1::from(vec![-a[1].conj(), a[0].conj()]);
    Array2::from_shape_vec((2, 2), vec![a[0], b[0], a[1], b[1]]).unwrap()
}

fn scaled(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).round() as usize).max(16)
}

fn oracle_small_checks(scale: f64) -> Vec<Check> {
    // sample sizes shrink with `scale`; every tolerance below is derived
    // from the actual n used, so it widens automatically
    let mut checks = Vec::new();

    // sigma-bar against the master equation on the Rabi preset
    let model = rabi_model();
    let mixture = InitialMixture::pure(StateVector::basis(2, 1).unwrap());
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 250).unwrap();
    let n = scaled(2000, scale);
    let pe = [DenseOperator::basis_projector(2, 0).unwrap()];
    let params = EnsembleParams {
        model: &model,
        mixture: &mixture,
        grid: &grid,
        observables: &pe,
        engine: Unraveling::EulerOrder1,
        n_traj: n,
        master_seed: 1001,
        delta_p_max: 0.1,
    };
    let sample_times = [0.5, 2.0];
    let sigmas = mean_density(&params, &sample_times).unwrap();
    let (trace, table) = me_evolve(&model, &mixture.density(), &grid, &pe).unwrap();
    let bound = 5.0 / (n as f64).sqrt();
    for (rho_avg, &t) in sigmas.iter().zip(sample_times.iter()) {
        let idx = grid.nearest_sample_index(t);
        checks.push(Check::new(
            format!("sigma-bar vs master equation (two-level, t = {t})"),
            rho_avg.max_abs_diff(&trace.states[idx]),
            0.0,
            bound,
        ));
    }

    // ensemble-mean excited population against the master curve
    let result = run_ensemble(&params).unwrap();
    let mut max_z = 0.0f64;
    for k in 0..result.times.len() {
        let dev = (result.mean[[k, 0]] - table[[k, 0]]).abs();
        max_z = max_z.max(dev / (result.stderr[[k, 0]] + 2e-3));
    }
    checks.push(Check::new(
        "mean P_e vs master equation (two-level, max z-score)",
        max_z,
        0.0,
        4.0,
    ));

    // driven damped cavity, photon number
    let cavity = damped_cavity_model(&CavityParams {
        kappa: 1.0,
        n_max: 3,
        drive: 0.5,
    })
    .unwrap();
    let cavity_mix = InitialMixture::pure(StateVector::basis(4, 0).unwrap());
    let cavity_grid = TimeGrid::new(0.0, 2.0, 1e-3, 250).unwrap();
    let number = [DenseOperator::number_operator(4)];
    let cavity_params = EnsembleParams {
        model: &cavity,
        mixture: &cavity_mix,
        grid: &cavity_grid,
        observables: &number,
        engine: Unraveling::EulerOrder1,
        n_traj: scaled(1000, scale),
        master_seed: 1002,
        delta_p_max: 0.1,
    };
    let cavity_result = run_ensemble(&cavity_params).unwrap();
    let (_, cavity_table) =
        me_evolve(&cavity, &cavity_mix.density(), &cavity_grid, &number).unwrap();
    let mut max_z = 0.0f64;
    for k in 0..cavity_result.times.len() {
        let dev = (cavity_result.mean[[k, 0]] - cavity_table[[k, 0]]).abs();
        max_z = max_z.max(dev / (cavity_result.stderr[[k, 0]] + 2e-3));
    }
    checks.push(Check::new(
        "mean <n> vs master equation (cavity dim 4, max z-score)",
        max_z,
        0.0,
        4.0,
    ));

    // jump-time distribution of the undriven excited atom, both methods
    let decay = two_level_model(&TwoLevelParams {
        gamma: 1.0,
        rabi: 0.0,
        detuning: 0.0,
    })
    .unwrap();
    let e = StateVector::basis(2, 0).unwrap();
    let n_ks = scaled(2000, scale);
    let cdf = |t: f64| 1.0 - (-t).exp();
    for (label, method, dt) in [
        ("euler", StepMethod::EulerOrder1, 1e-3),
        ("waiting_time", StepMethod::WaitingTime, 1e-2),
    ] {
        let ks_grid = TimeGrid::new(0.0, 8.0, dt, (8.0 / dt).round() as usize).unwrap();
        let mut times = Vec::with_capacity(n_ks);
        for i in 0..n_ks {
            let mut rng = TrajectoryRng::substream(1003, i as u64);
            let record = run_trajectory(&decay, &e, &ks_grid, &[], method, 0.1, &mut rng).unwrap();
            if let Some(event) = record.jumps.first() {
                times.push(event.time);
            }
        }
        checks.push(Check::new(
            format!("jump-time CDF vs 1 - e^(-Gamma t) ({label}, KS)"),
            ks_statistic(&times, cdf),
            0.0,
            1.5 / (n_ks as f64).sqrt(),
        ));
    }

    checks
}

fn statistics_checks(scale: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    let widen = 1.0 / scale.sqrt();

    // complex Wiener increments: covariance structure
    let dt = 0.01;
    let n = scaled(1_000_000, scale);
    let mut rng = TrajectoryRng::substream(2001, 0);
    let (mut rr, mut ii, mut ri, mut cross) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        if let NoiseIncrement::Complex(xi) =
            NoiseIncrement::sample(DiffusionMethod::ItoComplex, 2, dt, &mut rng)
        {
            rr += xi[0].re * xi[0].re;
            ii += xi[0].im * xi[0].im;
            ri += xi[0].re * xi[0].im;
            cross += xi[0].re * xi[1].re;
        }
    }
    let nf = n as f64;
    let tol = 0.005 * widen;
    checks.push(Check::new(
        "noise covariance Re.Re / dt",
        rr / nf / dt,
        1.0,
        tol,
    ));
    checks.push(Check::new(
        "noise covariance Im.Im / dt",
        ii / nf / dt,
        1.0,
        tol,
    ));
    checks.push(Check::new(
        "noise covariance Re.Im / dt",
        ri / nf / dt,
        0.0,
        tol,
    ));
    checks.push(Check::new(
        "noise cross-channel covariance / dt",
        cross / nf / dt,
        0.0,
        tol,
    ));

    // homodyne jump counts on a ground-state-held atom: window-count
    // mean mu^2 dt_w / 2, its standard deviation, and the gaussian behavior
    // of (N+ - N-)/mu
    let mu = 10.0;
    let window = 1.0;
    let t_end = (1000.0 * scale).max(50.0);
    let decay = two_level_model(&TwoLevelParams {
        gamma: 1.0,
        rabi: 0.0,
        detuning: 0.0,
    })
    .unwrap();
    let g = StateVector::basis(2, 1).unwrap();
    let grid = TimeGrid::new(0.0, t_end, 5e-4, 2000).unwrap();
    let mut rng = TrajectoryRng::substream(2002, 0);
    let record = finite_mu_run(
        &decay,
        &g,
        &grid,
        &[],
        mu,
        HomodyneScheme::TwoPhase,
        0.1,
        &mut rng,
    )
    .unwrap();
    let stats = jump_count_statistics(&record, 2, window).unwrap();
    let expected_mean = mu * mu * window / 2.0;
    let expected_std = expected_mean.sqrt();
    for ch in 0..2 {
        checks.push(Check::new(
            format!("window count mean / (mu^2 dt/2), channel {ch}"),
            stats.mean[ch] / expected_mean,
            1.0,
            0.02 * widen,
        ));
        checks.push(Check::new(
            format!("window count std / sqrt(mu^2 dt/2), channel {ch}"),
            stats.variance[ch].sqrt() / expected_std,
            1.0,
            0.10 * widen,
        ));
    }
    let (diff_mean, diff_std) = stats.scaled_difference(0, 1, mu);
    let diff_se = diff_std / (stats.n_windows as f64).sqrt();
    checks.push(Check::new(
        "(N+ - N-)/mu window mean (z-score vs 0)",
        diff_mean / diff_se.max(1e-12),
        0.0,
        3.0,
    ));
    checks.push(Check::new(
        "(N+ - N-)/mu window std / sqrt(dt)",
        diff_std / window.sqrt(),
        1.0,
        0.10 * widen,
    ));

    checks.extend(scaling_checks());
    checks
}

/// The N-vs-N^2 memory scaling report: live state storage of the trajectory
/// and master engines on damped cavities of increasing Fock dimension.
pub fn scaling_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let sizes = [50usize, 100, 200];
    let mut traj_bytes = Vec::new();
    let mut master_bytes = Vec::new();
    for &n_max in &sizes {
        let model = damped_cavity_model(&CavityParams {
            kappa: 1.0,
            n_max,
            drive: 0.0,
        })
        .unwrap();
        let dim = n_max + 1;

        // trajectory engine: propagate a few steps, measure the state
        let phi0 = StateVector::basis(dim, n_max / 2).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 1e-3, 10).unwrap();
        let mut rng = TrajectoryRng::substream(3001, n_max as u64);
        let record = run_trajectory(
            &model,
            &phi0,
            &grid,
            &[],
            StepMethod::EulerOrder1,
            0.1,
            &mut rng,
        )
        .unwrap();
        traj_bytes.push(record.final_state.storage_bytes() as f64);

        // master engine: one RK4 step, measure the density matrix
        let rho0 = StateVector::basis(dim, n_max / 2).unwrap().projector();
        let rho = me_step_rk4(&model, &rho0, 1e-4).unwrap();
        master_bytes.push(rho.storage_bytes() as f64);
    }
    for k in 1..sizes.len() {
        let dim_ratio = (sizes[k] + 1) as f64 / (sizes[k - 1] + 1) as f64;
        checks.push(Check::new(
            format!(
                "trajectory state bytes ratio n_max {} -> {} ({} -> {} B)",
                sizes[k - 1],
                sizes[k],
                traj_bytes[k - 1],
                traj_bytes[k]
            ),
            traj_bytes[k] / traj_bytes[k - 1],
            dim_ratio,
            0.2 * dim_ratio,
        ));
        checks.push(Check::new(
            format!(
                "master state bytes ratio n_max {} -> {} ({} -> {} B)",
                sizes[k - 1],
                sizes[k],
                master_bytes[k - 1],
                master_bytes[k]
            ),
            master_bytes[k] / master_bytes[k - 1],
            dim_ratio * dim_ratio,
            0.2 * dim_ratio * dim_ratio,
        ));
    }
    checks
}
