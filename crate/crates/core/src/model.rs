//! The system model `(H_S, {C_m})` and the algebraic constructions shared by
//! all engines: effective non-Hermitian Hamiltonian, Lindblad superoperator
//! action, and the channel transformations that leave it invariant.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, DenseOperator, DensityMatrix, StateVector, HERMITICITY_TOL};

/// A Markovian open-system model: Hermitian Hamiltonian `H_S` plus an ordered
/// list of jump operators `C_m`.
///
/// Channel ordering is the construction order and is part of the model's
/// identity: jump events reference channels by index. All fields are
/// immutable after construction, so models can be shared freely across
/// concurrent trajectory workers.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: DenseOperator,
    jump_ops: Vec<DenseOperator>,
}

impl LindbladModel {
    /// Validates Hermiticity of `H_S` (hard error beyond 1e-10) and that all
    /// jump operators share its dimension.
    pub fn new(hamiltonian: DenseOperator, jump_ops: Vec<DenseOperator>) -> Result<Self> {
        let dev = hamiltonian.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { max_deviation: dev });
        }
        let dim = hamiltonian.dim();
        for op in &jump_ops {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
        }
        Ok(LindbladModel {
            hamiltonian,
            jump_ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &DenseOperator {
        &self.hamiltonian
    }

    pub fn jump_ops(&self) -> &[DenseOperator] {
        &self.jump_ops
    }

    pub fn n_channels(&self) -> usize {
        self.jump_ops.len()
    }
}

/// Phase set used to mix jump operators with a reference amplitude `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomodyneScheme {
    /// `epsilon = +1, -1`, divisor `sqrt(2)`; 2M channels.
    TwoPhase,
    /// `epsilon = +1, -1, +i, -i`, divisor 2; 4M channels.
    FourPhase,
}

/// The non-Hermitian effective Hamiltonian `H = H_S - (i/2) sum_m C_m^dag C_m`
/// generating the norm-decaying no-jump evolution.
pub fn effective_hamiltonian(model: &LindbladModel) -> DenseOperator {
    let mut h = model.hamiltonian().entries().clone();
    let half_i = c(0.0, -0.5);
    for op in model.jump_ops() {
        let cdc = op.dagger().entries().dot(op.entries());
        h = h + cdc.mapv(|z| z * half_i);
    }
    DenseOperator::from_matrix(h).expect("dimensions validated at model construction")
}

/// Right-hand side of the master equation:
/// `i [rho, H_S] + sum_m (C_m rho C_m^dag - 1/2 {C_m^dag C_m, rho})`.
///
/// The result is Hermitian and traceless (within roundoff) whenever `rho` is
/// Hermitian.
pub fn lindblad_rhs(model: &LindbladModel, rho: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    if rho.nrows() != model.dim() || rho.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: rho.nrows(),
        });
    }
    let h = model.hamiltonian().entries();
    // i [rho, H] = i (rho H - H rho)
    let mut out = (rho.dot(h) - h.dot(rho)).mapv(|z| z * c(0.0, 1.0));
    let half = c(0.5, 0.0);
    for op in model.jump_ops() {
        let cm = op.entries();
        let cdag = op.dagger();
        let cdc = cdag.entries().dot(cm);
        out = out + cm.dot(rho).dot(cdag.entries());
        let anti = cdc.dot(rho) + rho.dot(&cdc);
        out = out - anti.mapv(|z| z * half);
    }
    Ok(out)
}

/// Same as [`lindblad_rhs`] but on the wrapped density-matrix type.
pub fn lindblad_rhs_density(
    model: &LindbladModel,
    rho: &DensityMatrix,
) -> Result<Array2<Complex64>> {
    lindblad_rhs(model, rho.entries())
}

/// `<phi|A|phi>`; real within roundoff when `A` is Hermitian.
pub fn expectation(phi: &StateVector, op: &DenseOperator) -> Result<Complex64> {
    let applied = op.apply(phi)?;
    Ok(phi
        .amplitudes()
        .iter()
        .zip(applied.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Replace the channel set by `C'_m = sum_n mixing[m, n] C_n` with a unitary
/// mixing matrix. The relaxation superoperator is unchanged, only the
/// unraveling into jump directions differs.
pub fn unfold_transform(
    model: &LindbladModel,
    mixing: &Array2<Complex64>,
) -> Result<LindbladModel> {
    let m = model.n_channels();
    if mixing.nrows() != m || mixing.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: mixing.nrows(),
        });
    }
    // unitarity: max |(U^dag U - 1)_{jk}| <= 1e-10
    let udag_u = mixing.t().mapv(|z| z.conj()).dot(mixing);
    let eye: Array2<Complex64> = Array2::eye(m);
    let dev = (&udag_u - &eye)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev > 1e-10 {
        return Err(Error::NotUnitary { max_deviation: dev });
    }

    let dim = model.dim();
    let mut new_ops = Vec::with_capacity(m);
    for row in 0..m {
        let mut acc: Array2<Complex64> = Array2::zeros((dim, dim));
        for (col, op) in model.jump_ops().iter().enumerate() {
            let w = mixing[[row, col]];
            if w != c(0.0, 0.0) {
                acc = acc + op.entries().mapv(|z| z * w);
            }
        }
        new_ops.push(DenseOperator::from_matrix(acc)?);
    }
    LindbladModel::new(model.hamiltonian().clone(), new_ops)
}

/// Replace each channel `C_m` by the homodyne set `D_{m,eps}` mixing it with
/// a reference amplitude `mu`:
///
/// * two-phase:  `D_{m,eps} = (mu 1 + eps C_m)/sqrt(2)`, `eps = +1, -1`;
/// * four-phase: `D_{m,eps} = (mu 1 + eps C_m)/2`, `eps = +1, -1, +i, -i`.
///
/// Channel ordering: for each `m` in input order, the `eps` values in the
/// order listed above. The relaxation superoperator is exactly unchanged for
/// any `mu > 0`.
pub fn homodyne_channels(
    model: &LindbladModel,
    mu: f64,
    scheme: HomodyneScheme,
) -> Result<LindbladModel> {
    if mu <= 0.0 {
        return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
    }
    let dim = model.dim();
    let eye: Array2<Complex64> = Array2::eye(dim);
    let (phases, divisor): (&[Complex64], f64) = match scheme {
        HomodyneScheme::TwoPhase => (&[c(1.0, 0.0), c(-1.0, 0.0)], std::f64::consts::SQRT_2),
        HomodyneScheme::FourPhase => (&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)], 2.0),
    };
    let inv = c(1.0 / divisor, 0.0);
    let mut channels = Vec::with_capacity(model.n_channels() * phases.len());
    for op in model.jump_ops() {
        for &eps in phases {
            let d =
                (eye.mapv(|z| z * c(mu, 0.0)) + op.entries().mapv(|z| z * eps)).mapv(|z| z * inv);
            channels.push(DenseOperator::from_matrix(d)?);
        }
    }
    LindbladModel::new(model.hamiltonian().clone(), channels)
}

/// Upper bound on the largest |eigenvalue| of the effective Hamiltonian,
/// computed as its infinity norm. Suggested step sizes are
/// `dt <= safety / stability_bound(model)`.
pub fn stability_bound(model: &LindbladModel) -> f64 {
    effective_hamiltonian(model).inf_norm()
}
