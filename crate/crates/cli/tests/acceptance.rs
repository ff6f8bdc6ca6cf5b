//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line with the measured values (run with `--nocapture` to see
//! them). Tolerances are fixed here, not tuned at runtime.

use std::fs;
use std::path::PathBuf;

use mcwf::diffusion::{finite_mu_run, jump_count_statistics};
use mcwf::ensemble::{mean_density, run_ensemble, EnsembleParams, InitialMixture, Unraveling};
use mcwf::jump::{run_trajectory, StepMethod};
use mcwf::master::me_evolve;
use mcwf::model::HomodyneScheme;
use mcwf::presets::{two_level_model, TwoLevelParams};
use mcwf::rng::TrajectoryRng;
use mcwf::stats::{fit_exponential_rate, ks_statistic, ks_two_sample};
use mcwf::{DenseOperator, DensityMatrix, StateVector, TimeGrid};
use mcwf_cli::config::parse_config;
use mcwf_cli::runner::execute;
use mcwf_cli::validate::{run_suite, scaling_checks, SuiteKind};

fn rabi_model() -> mcwf::LindbladModel {
    two_level_model(&TwoLevelParams {
        gamma: 1.0,
        rabi: 3.0,
        detuning: 0.0,
    })
    .unwrap()
}

fn decay_model() -> mcwf::LindbladModel {
    two_level_model(&TwoLevelParams {
        gamma: 1.0,
        rabi: 0.0,
        detuning: 0.0,
    })
    .unwrap()
}

fn ground() -> InitialMixture {
    InitialMixture::pure(StateVector::basis(2, 1).unwrap())
}

fn pe() -> DenseOperator {
    DenseOperator::basis_projector(2, 0).unwrap()
}

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "{} criterion {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion}: {detail}");
}

/// Driven two-level atom, n = 1000 trajectories: the ensemble mean of the
/// excited population tracks the master equation within 0.05 everywhere;
/// with the historical n = 100 the agreement is qualitative (<= 0.15) and
/// the curve is a damped oscillation.
#[test]
fn criterion_01_rabi_reproduction() {
    let model = rabi_model();
    let mixture = ground();
    let grid = TimeGrid::new(0.0, 10.0, 1e-3, 100).unwrap();
    let observables = [pe()];
    let (_, oracle) = me_evolve(&model, &mixture.density(), &grid, &observables).unwrap();

    let run = |n: usize| {
        run_ensemble(&EnsembleParams {
            model: &model,
            mixture: &mixture,
            grid: &grid,
            observables: &observables,
            engine: Unraveling::EulerOrder1,
            n_traj: n,
            master_seed: 20_260_808,
            delta_p_max: 0.1,
        })
        .unwrap()
    };

    let big = run(1000);
    let mut dev_big = 0.0f64;
    for k in 0..big.times.len() {
        dev_big = dev_big.max((big.mean[[k, 0]] - oracle[[k, 0]]).abs());
    }

    let small = run(100);
    let mut dev_small = 0.0f64;
    for k in 0..small.times.len() {
        dev_small = dev_small.max((small.mean[[k, 0]] - oracle[[k, 0]]).abs());
    }
    // damped oscillation: rises above 0.55 early, settles near 9/19 late
    let early_max = (0..=20)
        .map(|k| small.mean[[k, 0]])
        .fold(f64::NEG_INFINITY, f64::max);
    let late_dev = (80..big.times.len())
        .map(|k| (small.mean[[k, 0]] - 9.0 / 19.0).abs())
        .fold(0.0f64, f64::max);

    report(
        "01 (Rabi oscillation reproduction)",
        dev_big <= 0.05 && dev_small <= 0.15 && early_max > 0.55 && late_dev < 0.15,
        &format!(
            "max dev n=1000: {dev_big:.4} (<= 0.05); n=100: {dev_small:.4} (<= 0.15); \
             first-peak {early_max:.3} (> 0.55); late spread {late_dev:.3} (< 0.15)"
        ),
    );
}

/// Undriven two-level master evolution: populations relax at Gamma and
/// coherences at Gamma/2, fitted to 1e-6 relative error.
#[test]
fn criterion_02_bloch_rates() {
    let gamma = 1.0;
    let model = decay_model();
    let mut m: ndarray::Array2<num_complex::Complex64> = ndarray::Array2::zeros((2, 2));
    m[[0, 0]] = num_complex::Complex64::new(0.7, 0.0);
    m[[1, 1]] = num_complex::Complex64::new(0.3, 0.0);
    m[[0, 1]] = num_complex::Complex64::new(0.25, -0.2);
    m[[1, 0]] = num_complex::Complex64::new(0.25, 0.2);
    let rho0 = DensityMatrix::new(m).unwrap();
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 100).unwrap();
    let (trace, _) = me_evolve(&model, &rho0, &grid, &[]).unwrap();
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
    let err_pop = (rate_pop - gamma).abs() / gamma;
    let err_coh = (rate_coh - gamma / 2.0).abs() / (gamma / 2.0);
    report(
        "02 (optical Bloch relaxation rates)",
        err_pop < 1e-6 && err_coh < 1e-6,
        &format!("population rate rel err {err_pop:.2e}, coherence {err_coh:.2e} (< 1e-6)"),
    );
}

/// Ensemble average of |phi><phi| over 10^4 trajectories coincides with the
/// master-equation density matrix to 5/sqrt(n) at t = 0.5, 2 and 10.
#[test]
fn criterion_03_equivalence_theorem() {
    let model = rabi_model();
    let mixture = ground();
    let grid = TimeGrid::new(0.0, 10.0, 1e-3, 500).unwrap();
    let n = 10_000;
    let params = EnsembleParams {
        model: &model,
        mixture: &mixture,
        grid: &grid,
        observables: &[],
        engine: Unraveling::EulerOrder1,
        n_traj: n,
        master_seed: 31_415,
        delta_p_max: 0.1,
    };
    let sample_times = [0.5, 2.0, 10.0];
    let sigmas = mean_density(&params, &sample_times).unwrap();
    let (trace, _) = me_evolve(&model, &mixture.density(), &grid, &[]).unwrap();
    let bound = 5.0 / (n as f64).sqrt();
    let mut max_dev = 0.0f64;
    for (sigma, &t) in sigmas.iter().zip(sample_times.iter()) {
        let idx = grid.nearest_sample_index(t);
        max_dev = max_dev.max(sigma.max_abs_diff(&trace.states[idx]));
    }
    report(
        "03 (equivalence with the master equation)",
        max_dev <= bound,
        &format!("max entrywise |sigma-bar - rho_ME| = {max_dev:.4} (<= {bound:.4}) at n = {n}"),
    );
}

/// Jump times of the undriven excited atom are exponential: KS <= 0.02
/// against 1 - e^{-Gamma t} for both the stepwise and waiting-time methods,
/// and the two methods agree with each other (KS <= 0.02).
#[test]
fn criterion_04_exponential_waiting_time() {
    let model = decay_model();
    let e = StateVector::basis(2, 0).unwrap();
    let n = 10_000;
    let collect = |method: StepMethod, dt: f64, seed: u64| -> Vec<f64> {
        let grid = TimeGrid::new(0.0, 8.0, dt, (8.0 / dt).round() as usize).unwrap();
        let mut times = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = TrajectoryRng::substream(seed, i as u64);
            let record = run_trajectory(&model, &e, &grid, &[], method, 0.1, &mut rng).unwrap();
            if let Some(event) = record.jumps.first() {
                times.push(event.time);
            }
        }
        times
    };
    let stepwise = collect(StepMethod::EulerOrder1, 1e-3, 161);
    let waiting = collect(StepMethod::WaitingTime, 1e-2, 162);
    let cdf = |t: f64| 1.0 - (-t).exp();
    let d_step = ks_statistic(&stepwise, cdf);
    let d_wait = ks_statistic(&waiting, cdf);
    let d_cross = ks_two_sample(&stepwise, &waiting);
    report(
        "04 (exponential waiting-time distribution)",
        d_step <= 0.02 && d_wait <= 0.02 && d_cross <= 0.02,
        &format!(
            "KS stepwise {d_step:.4}, waiting-time {d_wait:.4}, cross {d_cross:.4} (all <= 0.02)"
        ),
    );
}

/// Channel-set identities: two-phase and four-phase homodyne channels and
/// unitary channel mixing reproduce the relaxation action entrywise to 1e-9
/// on random Hermitian matrices.
#[test]
fn criterion_05_channel_identities() {
    let report_data = run_suite(SuiteKind::Identities, 1.0);
    let algebra_checks: Vec<_> = report_data
        .checks
        .iter()
        .filter(|c| c.name.contains("channel identity") || c.name.contains("unfold"))
        .collect();
    let all_passed = algebra_checks.iter().all(|c| c.passed);
    let worst = algebra_checks
        .iter()
        .map(|c| c.measured)
        .fold(0.0f64, f64::max);
    report(
        "05 (channel identity suite)",
        all_passed && algebra_checks.len() >= 6,
        &format!(
            "{} identity checks, worst entrywise deviation {worst:.2e} (<= 1e-9)",
            algebra_checks.len()
        ),
    );
}

/// Diffusive unravelings at n = 2000: ito_complex and ito_real at
/// dt = 1e-5 and finite_mu (mu = 10, dt = 5e-4) all match the master
/// equation within 3 standard errors at every sample time.
///
/// Sample spacing: any fixed step size leaves an O(dt) weak bias, so the
/// samples sit where the ensemble spread (and hence the standard error)
/// dominates that bias — away from t = 0, where stderr vanishes and no
/// finite-dt method of this family could pass a z-test.
#[test]
fn criterion_06_diffusive_unraveling() {
    let model = rabi_model();
    let mixture = ground();
    let observables = [pe()];
    let n = 2000;

    let mut detail = String::new();
    let mut all_ok = true;
    let cases: [(&str, Unraveling, f64, f64, f64, u64); 3] = [
        ("ito_complex", Unraveling::ItoComplex, 1e-5, 1.0, 0.2, 611),
        ("ito_real", Unraveling::ItoReal, 1e-5, 1.0, 0.2, 612),
        (
            "finite_mu(10)",
            Unraveling::FiniteMu {
                mu: 10.0,
                scheme: HomodyneScheme::TwoPhase,
            },
            5e-4,
            3.0,
            1.5,
            613,
        ),
    ];
    for (label, engine, dt, t_end, sample_dt, seed) in cases {
        let sample_every = (sample_dt / dt).round() as usize;
        let grid = TimeGrid::new(0.0, t_end, dt, sample_every).unwrap();
        let result = run_ensemble(&EnsembleParams {
            model: &model,
            mixture: &mixture,
            grid: &grid,
            observables: &observables,
            engine,
            n_traj: n,
            master_seed: seed,
            delta_p_max: 0.1,
        })
        .unwrap();
        let (_, oracle) = me_evolve(&model, &mixture.density(), &grid, &observables).unwrap();
        let mut worst_z = 0.0f64;
        let mut ok = true;
        for k in 0..result.times.len() {
            let dev = (result.mean[[k, 0]] - oracle[[k, 0]]).abs();
            let allow = 3.0 * result.stderr[[k, 0]];
            if dev > allow {
                ok = false;
            }
            worst_z = worst_z.max(dev / result.stderr[[k, 0]].max(1e-12));
        }
        all_ok &= ok;
        detail.push_str(&format!("{label}: max z {worst_z:.2}; "));
    }
    report(
        "06 (diffusive unravelings match the oracle)",
        all_ok,
        &format!("{detail}all within 3 stderr at n = {n}"),
    );
}

/// Homodyne jump statistics at mu = 10 on a ground-state-held atom:
/// windowed count mean mu^2 dt/2 within 2%, std sqrt(mu^2 dt/2) within 10%,
/// (N+ - N-)/mu consistent with zero mean and std sqrt(dt) within 10%.
#[test]
fn criterion_07_jump_count_statistics() {
    let model = decay_model();
    let g = StateVector::basis(2, 1).unwrap();
    let mu = 10.0;
    let window = 1.0;
    let grid = TimeGrid::new(0.0, 1000.0, 5e-4, 2000).unwrap();
    let mut rng = TrajectoryRng::substream(700, 0);
    let record = finite_mu_run(
        &model,
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
    let mean_err = stats
        .mean
        .iter()
        .map(|m| (m / expected_mean - 1.0).abs())
        .fold(0.0f64, f64::max);
    let std_err = stats
        .variance
        .iter()
        .map(|v| (v.sqrt() / expected_std - 1.0).abs())
        .fold(0.0f64, f64::max);
    let (diff_mean, diff_std) = stats.scaled_difference(0, 1, mu);
    let diff_se = diff_std / (stats.n_windows as f64).sqrt();
    let diff_mean_ok = diff_mean.abs() <= 3.0 * diff_se;
    let diff_std_err = (diff_std / window.sqrt() - 1.0).abs();
    report(
        "07 (homodyne jump-count statistics)",
        mean_err <= 0.02 && std_err <= 0.10 && diff_mean_ok && diff_std_err <= 0.10,
        &format!(
            "count mean rel err {mean_err:.4} (<= 0.02), std rel err {std_err:.3} (<= 0.1), \
             (N+-N-)/mu mean {diff_mean:.4} (|.| <= {:.4}), std rel err {diff_std_err:.3} (<= 0.1)",
            3.0 * diff_se
        ),
    );
}

/// State-memory scaling on damped cavities: per-trajectory storage grows
/// linearly with the dimension and master-engine storage quadratically
/// (successive ratios within 20% of 2x and 4x).
#[test]
fn criterion_08_memory_scaling() {
    let checks = scaling_checks();
    let all_passed = checks.iter().all(|c| c.passed);
    let mut detail = String::new();
    for check in &checks {
        detail.push_str(&format!(
            "{}: {:.3} (expect {:.3} +- {:.3}); ",
            check.name, check.measured, check.expected, check.tolerance
        ));
    }
    report("08 (N vs N^2 state-memory scaling)", all_passed, &detail);
}

/// Equal seeds give byte-identical CSV, event log and manifest under worker
/// counts 1 and 8.
#[test]
fn criterion_09_determinism_across_workers() {
    let dir = std::env::temp_dir().join(format!("mcwf-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    let config_text = r#"
[model]
preset = "two_level"
gamma = 1.0
rabi = 3.0
detuning = 0.0

[run]
engine = "euler_order1"
t_end = 2.0
dt = 1e-3
sample_every = 200
n_traj = 300
master_seed = 99

[observables]
names = ["population:0", "population:1"]

[output]
results = "det.csv"
events = "det.events.jsonl"
manifest = "det.manifest.json"
"#;
    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for (label, workers) in [("w1", 1usize), ("w8", 8usize)] {
        let out_dir: PathBuf = dir.join(label);
        let config = parse_config(config_text, None).unwrap();
        execute(&config, Some(workers), Some(&out_dir)).unwrap();
        let mut blob = Vec::new();
        for name in ["det.csv", "det.events.jsonl", "det.manifest.json"] {
            blob.extend(fs::read(out_dir.join(name)).unwrap());
            blob.push(0);
        }
        outputs.push(blob);
    }
    let identical = outputs[0] == outputs[1];
    let _ = fs::remove_dir_all(&dir);
    report(
        "09 (byte-identical outputs across worker counts)",
        identical,
        &format!(
            "CSV + events + manifest identical across workers 1 and 8 ({} bytes)",
            outputs[0].len()
        ),
    );
}

/// Step-size control at n = 10^4: euler means at dt = 1e-3 and 5e-4 differ
/// by <= 0.01 pointwise; RK4 at dt = 1e-2 matches RK4 at dt = 1e-3 within
/// 0.01. The window [0, 1] covers the fastest dynamics (where the
/// first-order bias is largest) while the trajectory spread — pure
/// statistical noise between the independent runs — is still moderate.
#[test]
fn criterion_10_step_size_convergence() {
    let model = rabi_model();
    let mixture = ground();
    let observables = [pe()];
    let n = 10_000;
    let t_end = 1.0;

    let run = |engine: Unraveling, dt: f64, seed: u64| {
        let sample_every = (0.1 / dt).round() as usize;
        let grid = TimeGrid::new(0.0, t_end, dt, sample_every).unwrap();
        run_ensemble(&EnsembleParams {
            model: &model,
            mixture: &mixture,
            grid: &grid,
            observables: &observables,
            engine,
            n_traj: n,
            master_seed: seed,
            delta_p_max: 0.1,
        })
        .unwrap()
    };

    let euler_coarse = run(Unraveling::EulerOrder1, 1e-3, 1010);
    let euler_fine = run(Unraveling::EulerOrder1, 5e-4, 1011);
    let mut dev_euler = 0.0f64;
    for k in 0..euler_coarse.times.len() {
        dev_euler = dev_euler.max((euler_coarse.mean[[k, 0]] - euler_fine.mean[[k, 0]]).abs());
    }

    let rk4_coarse = run(Unraveling::Rk4NonHermitian, 1e-2, 1012);
    let rk4_fine = run(Unraveling::Rk4NonHermitian, 1e-3, 1013);
    let mut dev_rk4 = 0.0f64;
    for k in 0..rk4_coarse.times.len() {
        dev_rk4 = dev_rk4.max((rk4_coarse.mean[[k, 0]] - rk4_fine.mean[[k, 0]]).abs());
    }

    report(
        "10 (step-size convergence)",
        dev_euler <= 0.01 && dev_rk4 <= 0.01,
        &format!("euler dt halving dev {dev_euler:.4} (<= 0.01), rk4 coarse-vs-fine dev {dev_rk4:.4} (<= 0.01)"),
    );
}
