use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by model construction and the evolution engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("hamiltonian not Hermitian (max entrywise deviation {max_deviation:.3e})")]
    NotHermitian { max_deviation: f64 },

    #[error("mixing matrix not unitary (max entrywise deviation {max_deviation:.3e})")]
    NotUnitary { max_deviation: f64 },

    #[error("state vector not normalized (norm {norm:.12})")]
    NotNormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid initial mixture: {0}")]
    InvalidMixture(String),

    #[error("jump probability delta_p = {delta_p:.3e} exceeds delta_p_max = {max:.3e}; reduce dt")]
    StepTooLarge { delta_p: f64, max: f64 },

    #[error("jump target C_{channel}|phi> has numerically zero norm ({norm:.3e})")]
    ZeroNormJump { channel: usize, norm: f64 },

    #[error("norm increased during no-jump evolution ({from:.12} -> {to:.12}); model invalid or dt too large")]
    NormIncreased { from: f64, to: f64 },

    #[error("non-finite amplitudes encountered (noise blow-up; reduce dt)")]
    NonFinite,

    #[error("model has no jump operators; no relaxation to converge")]
    NoJumpOperators,

    #[error("no convergence within {steps} steps (residual {residual:.3e}, tol {tol:.3e})")]
    NoConvergence {
        steps: usize,
        residual: f64,
        tol: f64,
    },
}
