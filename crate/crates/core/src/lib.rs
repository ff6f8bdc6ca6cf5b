//! Stochastic wave-function simulation of Markovian open quantum systems.
//!
//! The system is specified by a Hamiltonian `H_S` and a set of jump operators
//! `C_m` (a [`LindbladModel`]). Three families of solvers evolve it:
//!
//! * [`master`] — deterministic RK4 integration of the density-matrix master
//!   equation; the reference every stochastic method is checked against.
//! * [`jump`] — Monte-Carlo wave functions: non-Hermitian propagation plus
//!   randomly decided quantum jumps, including waiting-time sampling where a
//!   single uniform draw fixes each jump time.
//! * [`diffusion`] — quantum-state-diffusion (continuous Itô) unravelings and
//!   the finite-`mu` homodyne jump simulation whose large-`mu` limit they are.
//!
//! Ensemble averages of trajectory observables reproduce the master-equation
//! expectation values; [`ensemble`] manages trajectory ensembles with
//! reproducible per-trajectory random substreams and streaming statistics.
//!
//! Units: `hbar = 1`; all rates and frequencies are in the user's rate unit.

pub mod diffusion;
pub mod ensemble;
mod error;
pub mod grid;
pub mod jump;
pub mod linalg;
pub mod master;
pub mod model;
pub mod presets;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use linalg::{DenseOperator, DensityMatrix, StateVector};
pub use model::{HomodyneScheme, LindbladModel};
