//! Dense complex vectors and matrices: the wave function, operators and
//! density matrices all live in a single N-dimensional Hilbert space.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `sum |c_i|^2 = 1` for states produced by normalizing ops.
pub const NORM_TOL: f64 = 1e-10;
/// Entrywise tolerance on Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A normalized pure state `|phi>`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    /// Build from amplitudes, rescaling to unit norm. Errors on zero norm
    /// or an empty vector.
    pub fn normalized(amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter(
                "state dimension must be >= 1".into(),
            ));
        }
        let norm = l2_norm(&amplitudes);
        if norm < 1e-14 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector {
            amplitudes: amplitudes / c(norm, 0.0),
        })
    }

    /// Build from amplitudes that must already be normalized within [`NORM_TOL`].
    pub fn new(amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter(
                "state dimension must be >= 1".into(),
            ));
        }
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector { amplitudes })
    }

    /// Basis state `|k>` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "state dimension must be >= 1".into(),
            ));
        }
        if k >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {k} out of range for dimension {dim}"
            )));
        }
        let mut amplitudes = Array1::zeros(dim);
        amplitudes[k] = c(1.0, 0.0);
        Ok(StateVector { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        inner_product(&self.amplitudes, &other.amplitudes)
    }

    /// The projector `|phi><phi|`.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Bytes held by the amplitude storage; used by the N-vs-N^2 scaling report.
    pub fn storage_bytes(&self) -> usize {
        self.amplitudes.len() * std::mem::size_of::<Complex64>()
    }

    pub(crate) fn from_raw_normalized(amplitudes: Array1<Complex64>) -> Self {
        StateVector { amplitudes }
    }
}

/// A square complex matrix acting on the system Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    entries: Array2<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(entries: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::InvalidParameter(
                "operator dimension must be >= 1".into(),
            ));
        }
        Ok(DenseOperator { entries })
    }

    /// Build from rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &(re, im)) in row.iter().enumerate() {
                entries[[i, j]] = c(re, im);
            }
        }
        Self::from_matrix(entries)
    }

    pub fn identity(dim: usize) -> Self {
        DenseOperator {
            entries: Array2::eye(dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        DenseOperator {
            entries: Array2::zeros((dim, dim)),
        }
    }

    /// `|j><k|` in dimension `dim`.
    pub fn ketbra(dim: usize, j: usize, k: usize) -> Result<Self> {
        if j >= dim || k >= dim {
            return Err(Error::InvalidParameter(format!(
                "ketbra indices ({j}, {k}) out of range for dimension {dim}"
            )));
        }
        let mut entries = Array2::zeros((dim, dim));
        entries[[j, k]] = c(1.0, 0.0);
        Ok(DenseOperator { entries })
    }

    /// Projector `|k><k|`: the population observable of basis state `k`.
    pub fn basis_projector(dim: usize, k: usize) -> Result<Self> {
        Self::ketbra(dim, k, k)
    }

    /// `diag(0, 1, ..., dim-1)`: the number operator in the Fock basis.
    pub fn number_operator(dim: usize) -> Self {
        let mut entries = Array2::zeros((dim, dim));
        for k in 0..dim {
            entries[[k, k]] = c(k as f64, 0.0);
        }
        DenseOperator { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> DenseOperator {
        DenseOperator {
            entries: self.entries.t().mapv(|z| z.conj()),
        }
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            entries: self.entries.dot(&other.entries),
        }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            entries: &self.entries + &other.entries,
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            entries: &self.entries - &other.entries,
        }
    }

    pub fn scale(&self, factor: Complex64) -> DenseOperator {
        DenseOperator {
            entries: self.entries.mapv(|z| z * factor),
        }
    }

    /// `A|phi>` as a raw amplitude vector (not renormalized).
    pub fn apply(&self, phi: &StateVector) -> Result<Array1<Complex64>> {
        if self.dim() != phi.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: phi.dim(),
            });
        }
        Ok(self.entries.dot(phi.amplitudes()))
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().iter().sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Infinity norm: maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.entries
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|z| z.norm()).sum())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `A = A^dagger`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut max = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dev = (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm();
                max = max.max(dev);
            }
        }
        max
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Hermitian part `(A + A^dagger)/2`.
    pub fn hermitian_part(&self) -> DenseOperator {
        let dag = self.dagger();
        DenseOperator {
            entries: (&self.entries + &dag.entries).mapv(|z| z * 0.5),
        }
    }

    /// Anti-Hermitian part `(A - A^dagger)/2`.
    pub fn anti_hermitian_part(&self) -> DenseOperator {
        let dag = self.dagger();
        DenseOperator {
            entries: (&self.entries - &dag.entries).mapv(|z| z * 0.5),
        }
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }
}

/// A system density matrix: Hermitian, unit trace, positive semidefinite
/// within tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validate Hermiticity (1e-10 entrywise), trace (1 within 1e-8) and
    /// positivity (min eigenvalue >= -1e-8).
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let rho = DensityMatrix { entries };
        let herm_dev = rho.as_operator().hermiticity_deviation();
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (max deviation {herm_dev:.3e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Wrap a matrix that is trusted to satisfy the invariants (e.g. output
    /// of a trace-preserving integrator step).
    pub fn from_matrix_unchecked(entries: Array2<Complex64>) -> Self {
        DensityMatrix { entries }
    }

    /// `|phi><phi|`.
    pub fn from_pure(phi: &StateVector) -> Self {
        let n = phi.dim();
        let amps = phi.amplitudes();
        let mut entries = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                entries[[i, j]] = amps[i] * amps[j].conj();
            }
        }
        DensityMatrix { entries }
    }

    /// The maximally mixed state `1/N`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let eye: Array2<Complex64> = Array2::eye(dim);
        let w = c(1.0 / dim as f64, 0.0);
        DensityMatrix {
            entries: eye.mapv(|z| z * w),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn as_operator(&self) -> DenseOperator {
        DenseOperator {
            entries: self.entries.clone(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().iter().sum()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.entries
            .dot(&self.entries)
            .diag()
            .iter()
            .sum::<Complex64>()
            .re
    }

    /// `Tr(rho A)`, real part (the physical expectation of Hermitian `A`).
    pub fn expectation(&self, op: &DenseOperator) -> Result<f64> {
        if self.dim() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: op.dim(),
            });
        }
        Ok(self
            .entries
            .dot(op.entries())
            .diag()
            .iter()
            .sum::<Complex64>()
            .re)
    }

    /// Replace by `(rho + rho^dagger)/2`, suppressing roundoff drift.
    pub fn hermitize(&mut self) {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.entries[[i, j]] + self.entries[[j, i]].conj());
                self.entries[[i, j]] = avg;
                self.entries[[j, i]] = avg.conj();
            }
            self.entries[[i, i]] = c(self.entries[[i, i]].re, 0.0);
        }
    }

    /// Minimum eigenvalue (Hermitian input assumed).
    pub fn min_eigenvalue(&self) -> f64 {
        let eigs = hermitian_eigenvalues(&self.entries);
        eigs.first().copied().unwrap_or(0.0)
    }

    /// Largest entrywise |difference| to another density matrix.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Bytes held by the matrix storage; used by the N-vs-N^2 scaling report.
    pub fn storage_bytes(&self) -> usize {
        self.entries.len() * std::mem::size_of::<Complex64>()
    }
}

/// `y = A x` into a preallocated buffer. Contiguous row-major storage takes
/// a plain nested loop, which beats the generic gemv dispatch at the small
/// dimensions the engines step in their hot loops.
#[inline]
pub(crate) fn matvec_into(a: &Array2<Complex64>, x: &Array1<Complex64>, y: &mut Array1<Complex64>) {
    let n = a.nrows();
    match (a.as_slice(), x.as_slice(), y.as_slice_mut()) {
        (Some(a_s), Some(x_s), Some(y_s)) => {
            for i in 0..n {
                let row = &a_s[i * n..(i + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (aij, xj) in row.iter().zip(x_s.iter()) {
                    acc += aij * xj;
                }
                y_s[i] = acc;
            }
        }
        _ => {
            ndarray::linalg::general_mat_vec_mul(
                Complex64::new(1.0, 0.0),
                a,
                x,
                Complex64::new(0.0, 0.0),
                y,
            );
        }
    }
}

#[inline]
pub(crate) fn l2_norm_sqr(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub(crate) fn l2_norm(v: &Array1<Complex64>) -> f64 {
    l2_norm_sqr(v).sqrt()
}

#[inline]
pub(crate) fn inner_product(bra: &Array1<Complex64>, ket: &Array1<Complex64>) -> Complex64 {
    bra.iter().zip(ket.iter()).map(|(b, k)| b.conj() * k).sum()
}

/// Eigenvalues of a Hermitian complex matrix, ascending.
///
/// Uses the real-symmetric embedding `[[X, -Y], [Y, X]]` of `A = X + iY`
/// (each eigenvalue of `A` appears twice) with cyclic Jacobi sweeps. Matrices
/// here are small (N of order 10), so the 2N x 2N detour costs nothing and
/// avoids a complex-rotation Jacobi. A diagonal fast path covers the large
/// Fock-basis matrices used in the scaling report.
pub fn hermitian_eigenvalues(a: &Array2<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eigenvalues needs a square matrix");
    if n == 0 {
        return Vec::new();
    }

    // Fast path: numerically diagonal matrix.
    let mut max_off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_off = max_off.max(a[[i, j]].norm());
            }
        }
    }
    if max_off < 1e-300 {
        let mut d: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return d;
    }

    let m = 2 * n;
    let mut s = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a[[i, j]];
            s[i * m + j] = z.re;
            s[i * m + (j + n)] = -z.im;
            s[(i + n) * m + j] = z.im;
            s[(i + n) * m + (j + n)] = z.re;
        }
    }

    jacobi_eigenvalues_symmetric(&mut s, m)
        .into_iter()
        .step_by(2)
        .collect()
}

/// Cyclic Jacobi on a dense real symmetric matrix stored row-major.
fn jacobi_eigenvalues_symmetric(s: &mut [f64], n: usize) -> Vec<f64> {
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| s[i * n + j].abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let tol = 1e-14 * scale;

    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(s[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = s[p * n + p];
                let aqq = s[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let skp = s[k * n + p];
                    let skq = s[k * n + q];
                    s[k * n + p] = cos * skp - sin * skq;
                    s[k * n + q] = sin * skp + cos * skq;
                }
                for k in 0..n {
                    let spk = s[p * n + k];
                    let sqk = s[q * n + k];
                    s[p * n + k] = cos * spk - sin * sqk;
                    s[q * n + k] = sin * spk + cos * sqk;
                }
            }
        }
    }

    let mut eigs: Vec<f64> = (0..n).map(|i| s[i * n + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}
