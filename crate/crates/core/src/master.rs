//! Deterministic density-matrix integration of the master equation with
//! classical RK4: the reference against which every stochastic engine is
//! validated.
//!
//! RK4 is applied directly to the matrix-valued right-hand side, so each step
//! costs a handful of N x N products and no N^2 x N^2 superoperator is ever
//! materialized. Every step re-Hermitizes the state to suppress roundoff
//! drift.

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{DenseOperator, DensityMatrix};
use crate::model::{lindblad_rhs, stability_bound, LindbladModel};

/// Density-matrix history at the sample times of a run.
#[derive(Debug, Clone)]
pub struct DensityTrace {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// One fourth-order step of the master equation; re-Hermitized output.
///
/// The caller is responsible for `dt * stability_bound(model) <= 0.5`;
/// [`me_evolve`] warns once when the guard is exceeded.
pub fn me_step_rk4(model: &LindbladModel, rho: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: rho.dim(),
        });
    }
    let next = rk4_step_raw(model, rho.entries(), dt)?;
    let mut out = DensityMatrix::from_matrix_unchecked(next);
    out.hermitize();
    Ok(out)
}

fn rk4_step_raw(
    model: &LindbladModel,
    rho: &Array2<Complex64>,
    dt: f64,
) -> Result<Array2<Complex64>> {
    let half = dt * 0.5;
    let k1 = lindblad_rhs(model, rho)?;
    let k2 = lindblad_rhs(model, &(rho + &k1.mapv(|z| z * half)))?;
    let k3 = lindblad_rhs(model, &(rho + &k2.mapv(|z| z * half)))?;
    let k4 = lindblad_rhs(model, &(rho + &k3.mapv(|z| z * dt)))?;
    let sixth = dt / 6.0;
    Ok(rho + &((k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * sixth)))
}

/// Evolve `rho0` over the grid, recording the density matrix and the
/// expectation values `Tr(rho A_j)` at each sample step.
///
/// Returns the trace together with the observable table, one row per sample
/// time and one column per observable.
pub fn me_evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observables: &[DenseOperator],
) -> Result<(DensityTrace, Array2<f64>)> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: rho0.dim(),
        });
    }
    for op in observables {
        if op.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: op.dim(),
            });
        }
    }
    let eta = stability_bound(model);
    if grid.dt() * eta > 0.5 {
        eprintln!(
            "warning: dt * stability_bound = {:.3} exceeds 0.5; RK4 accuracy degrades",
            grid.dt() * eta
        );
    }

    let n_samples = grid.n_samples();
    let mut times = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);
    let mut table = Array2::zeros((n_samples, observables.len()));

    let mut rho = rho0.clone();
    let mut sample_idx = 0;
    let mut record = |idx: usize, t: f64, rho: &DensityMatrix, table: &mut Array2<f64>| {
        times.push(t);
        for (j, op) in observables.iter().enumerate() {
            table[[idx, j]] = rho.expectation(op).expect("dimensions checked above");
        }
        states.push(rho.clone());
    };

    record(sample_idx, grid.time_at(0), &rho, &mut table);
    sample_idx += 1;

    for step in 1..=grid.n_steps() {
        rho = me_step_rk4(model, &rho, grid.dt())?;
        if grid.is_sample_step(step) {
            record(sample_idx, grid.time_at(step), &rho, &mut table);
            sample_idx += 1;
        }
    }

    Ok((DensityTrace { times, states }, table))
}

/// Fixed point of the master equation, found by evolving the maximally mixed
/// state until `max |rhs entry| < tol`.
pub fn me_steady_state(model: &LindbladModel, tol: f64) -> Result<DensityMatrix> {
    if model.n_channels() == 0 {
        return Err(Error::NoJumpOperators);
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    let eta = stability_bound(model);
    let dt = 0.1 / eta.max(1e-12);
    const MAX_STEPS: usize = 2_000_000;

    let mut rho = DensityMatrix::maximally_mixed(model.dim());
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_STEPS {
        let rhs = lindblad_rhs(model, rho.entries())?;
        residual = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if residual < tol {
            rho.hermitize();
            return Ok(rho);
        }
        rho = me_step_rk4(model, &rho, dt)?;
    }
    Err(Error::NoConvergence {
        steps: MAX_STEPS,
        residual,
        tol,
    })
}

/// Observable columns from a density trace without re-running the evolution.
pub fn observables_from_trace(
    trace: &DensityTrace,
    observables: &[DenseOperator],
) -> Result<Array2<f64>> {
    let mut table = Array2::zeros((trace.states.len(), observables.len()));
    for (i, rho) in trace.states.iter().enumerate() {
        for (j, op) in observables.iter().enumerate() {
            table[[i, j]] = rho.expectation(op)?;
        }
    }
    Ok(table)
}

/// Convenience: the sample-time history of all density-matrix entries,
/// shaped `(n_samples, dim, dim)`.
pub fn trace_entries(trace: &DensityTrace) -> Array3<Complex64> {
    let n = trace.states.len();
    let dim = trace.states.first().map_or(0, |s| s.dim());
    let mut out = Array3::zeros((n, dim, dim));
    for (i, rho) in trace.states.iter().enumerate() {
        out.index_axis_mut(ndarray::Axis(0), i)
            .assign(rho.entries());
    }
    out
}
