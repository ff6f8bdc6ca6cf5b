//! Trajectory ensembles against the master-equation integrator: the
//! ensemble-averaged projector and the observable means must reproduce the
//! deterministic density matrix within statistical error.

use mcwf::ensemble::{mean_density, run_ensemble, EnsembleParams, InitialMixture, Unraveling};
use mcwf::master::me_evolve;
use mcwf::model::unfold_transform;
use mcwf::presets::{damped_cavity_model, two_level_model, CavityParams, TwoLevelParams};
use mcwf::{DenseOperator, StateVector, TimeGrid};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

fn rabi_model() -> mcwf::LindbladModel {
    two_level_model(&TwoLevelParams {
        gamma: 1.0,
        rabi: 3.0,
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

#[test]
fn mean_projector_matches_master_equation() {
    // sigma-bar(t) vs rho_ME(t), entrywise, within 5/sqrt(n)
    let model = rabi_model();
    let mixture = ground();
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 500).unwrap();
    let n = 2000;
    let params = EnsembleParams {
        model: &model,
        mixture: &mixture,
        grid: &grid,
        observables: &[],
        engine: Unraveling::EulerOrder1,
        n_traj: n,
        master_seed: 2024,
        delta_p_max: 0.1,
    };
    let sample_times = [0.5, 2.0];
    let sigmas = mean_density(&params, &sample_times).unwrap();

    let (trace, _) = me_evolve(&model, &mixture.density(), &grid, &[]).unwrap();
    let bound = 5.0 / (n as f64).sqrt();
    for (rho_avg, &t) in sigmas.iter().zip(sample_times.iter()) {
        let idx = grid.nearest_sample_index(t);
        let dev = rho_avg.max_abs_diff(&trace.states[idx]);
        assert!(dev <= bound, "t = {t}: deviation {dev} > {bound}");
        assert!((rho_avg.trace().re - 1.0).abs() < 1e-10);
        assert!(rho_avg.min_eigenvalue() > -1e-12);
    }
}

#[test]
fn ensemble_mean_tracks_master_curve() {
    let model = rabi_model();
    let mixture = ground();
    let grid = TimeGrid::new(0.0, 5.0, 1e-3, 500).unwrap();
    let observables = [pe()];
    let params = EnsembleParams {
        model: &model,
        mixture: &mixture,
        grid: &grid,
        observables: &observables,
        engine: Unraveling::EulerOrder1,
        n_traj: 500,
        master_seed: 7,
        delta_p_max: 0.1,
    };
    let result = run_ensemble(&params).unwrap();
    let (_, table) = me_evolve(&model, &mixture.density(), &grid, &observables).unwrap();
    for k in 0..result.times.len() {
        let dev = (result.mean[[k, 0]] - table[[k, 0]]).abs();
        let allow = 4.0 * result.stderr[[k, 0]] + 2e-3;
        assert!(
            dev <= allow,
            "t = {}: |mean - oracle| = {dev} > {allow}",
            result.times[k]
        );
    }
}

#[test]
fn unfolding_leaves_ensemble_means_invariant() {
    // split the single channel through a Hadamard: jump records change,
    // observable means do not
    let model = rabi_model();
    let two_channel = mcwf::LindbladModel::new(
        model.hamiltonian().clone(),
        vec![model.jump_ops()[0].clone(), DenseOperator::zeros(2)],
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
    let mixed = unfold_transform(&two_channel, &hadamard).unwrap();

    let mixture = ground();
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 200).unwrap();
    let observables = [pe()];
    let run = |model: &mcwf::LindbladModel, seed: u64| {
        run_ensemble(&EnsembleParams {
            model,
            mixture: &mixture,
            grid: &grid,
            observables: &observables,
            engine: Unraveling::EulerOrder1,
            n_traj: 2000,
            master_seed: seed,
            delta_p_max: 0.1,
        })
        .unwrap()
    };
    let base = run(&model, 31);
    let alt = run(&mixed, 32);

    // means agree within 3 combined standard errors
    for k in 0..base.times.len() {
        let dev = (base.mean[[k, 0]] - alt.mean[[k, 0]]).abs();
        let combined = (base.stderr[[k, 0]].powi(2) + alt.stderr[[k, 0]].powi(2)).sqrt();
        assert!(
            dev <= 3.0 * combined + 1e-12,
            "t = {}: deviation {dev} vs combined stderr {combined}",
            base.times[k]
        );
    }
    // the two channels of the mixed model share the decay events
    assert!(alt.jump_rate_per_channel[0] > 0.0);
    assert!(alt.jump_rate_per_channel[1] > 0.0);
    let total_base: f64 = base.jump_rate_per_channel.iter().sum();
    let total_alt: f64 = alt.jump_rate_per_channel.iter().sum();
    assert!((total_base - total_alt).abs() < 0.05 * total_base.max(total_alt));
}

#[test]
fn estimator_error_shrinks_with_ensemble_size() {
    let model = rabi_model();
    let mixture = ground();
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 2000).unwrap(); // samples at 0 and 2
    let observables = [pe()];
    let (_, table) = me_evolve(&model, &mixture.density(), &grid, &observables).unwrap();
    let oracle = table[[1, 0]];

    let err = |n: usize| {
        let result = run_ensemble(&EnsembleParams {
            model: &model,
            mixture: &mixture,
            grid: &grid,
            observables: &observables,
            engine: Unraveling::EulerOrder1,
            n_traj: n,
            master_seed: 555,
            delta_p_max: 0.1,
        })
        .unwrap();
        (result.mean[[1, 0]] - oracle).abs()
    };
    let err_small = err(100);
    let err_large = err(10_000);
    assert!(
        err_large < err_small,
        "error did not shrink: n=100 -> {err_small}, n=10^4 -> {err_large}"
    );
    assert!(err_large < 0.02, "n=10^4 error {err_large}");
}

#[test]
fn reported_stderr_is_calibrated() {
    // over independent master seeds the oracle lies within 2 stderr in at
    // least 90% of (seed, time) cells
    let model = rabi_model();
    let mixture = ground();
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 500).unwrap();
    let observables = [pe()];
    let (_, table) = me_evolve(&model, &mixture.density(), &grid, &observables).unwrap();

    let mut covered = 0usize;
    let mut total = 0usize;
    for seed in 0..50u64 {
        let result = run_ensemble(&EnsembleParams {
            model: &model,
            mixture: &mixture,
            grid: &grid,
            observables: &observables,
            engine: Unraveling::EulerOrder1,
            n_traj: 200,
            master_seed: 10_000 + seed,
            delta_p_max: 0.1,
        })
        .unwrap();
        // skip t = 0 where stderr is identically zero
        for k in 1..result.times.len() {
            total += 1;
            if (result.mean[[k, 0]] - table[[k, 0]]).abs() <= 2.0 * result.stderr[[k, 0]] {
                covered += 1;
            }
        }
    }
    let coverage = covered as f64 / total as f64;
    assert!(coverage >= 0.9, "2-sigma coverage {coverage}");
}

#[test]
fn mixed_initial_state_sampling_matches_master() {
    let model = rabi_model();
    let e = StateVector::basis(2, 0).unwrap();
    let plus = StateVector::normalized(Array1::from(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]))
    .unwrap();
    let mixture = InitialMixture::new(vec![(0.5, e), (0.5, plus)]).unwrap();
    let grid = TimeGrid::new(0.0, 2.0, 1e-3, 250).unwrap();
    let observables = [pe()];
    let result = run_ensemble(&EnsembleParams {
        model: &model,
        mixture: &mixture,
        grid: &grid,
        observables: &observables,
        engine: Unraveling::EulerOrder1,
        n_traj: 2000,
        master_seed: 404,
        delta_p_max: 0.1,
    })
    .unwrap();
    let (_, table) = me_evolve(&model, &mixture.density(), &grid, &observables).unwrap();
    for k in 0..result.times.len() {
        let dev = (result.mean[[k, 0]] - table[[k, 0]]).abs();
        let allow = 4.0 * result.stderr[[k, 0]] + 2e-3;
        assert!(dev <= allow, "t = {}: {dev} > {allow}", result.times[k]);
    }
}

#[test]
fn cavity_photon_number_decays_at_kappa() {
    // amplitude damping: <n>(t) = n0 e^{-kappa t}; hand value at n0 = 2
    let kappa = 0.7;
    let model = damped_cavity_model(&CavityParams {
        kappa,
        n_max: 6,
        drive: 0.0,
    })
    .unwrap();
    let rho0 = StateVector::basis(7, 2).unwrap().projector();
    let number = DenseOperator::number_operator(7);
    let grid = TimeGrid::new(0.0, 3.0, 1e-3, 300).unwrap();
    let (_, table) = me_evolve(&model, &rho0, &grid, &[number]).unwrap();
    for (k, &t) in grid.sample_times().iter().enumerate() {
        let expected = 2.0 * (-kappa * t).exp();
        assert!(
            (table[[k, 0]] - expected).abs() < 1e-6,
            "t = {t}: <n> = {} vs {expected}",
            table[[k, 0]]
        );
    }
}
