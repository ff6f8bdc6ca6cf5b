//! Ready-made physical models: the driven two-level atom, a damped cavity
//! mode, and a three-level V system showing intermittent fluorescence.

use crate::error::{Error, Result};
use crate::linalg::{c, DenseOperator};
use crate::model::LindbladModel;

/// Driven two-level atom in the rotating frame.
///
/// Basis order is `(|e>, |g>)`: the excited-state amplitude is component 0.
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelParams {
    /// Spontaneous decay rate `Gamma`.
    pub gamma: f64,
    /// Rabi frequency `Omega`.
    pub rabi: f64,
    /// Laser-atom detuning `delta = omega_L - omega_A`.
    pub detuning: f64,
}

/// `H_S = -delta |e><e| + (Omega/2)(|e><g| + |g><e|)`, one decay channel
/// `C_1 = sqrt(Gamma) |g><e|`.
pub fn two_level_model(p: &TwoLevelParams) -> Result<LindbladModel> {
    if p.gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gamma must be > 0, got {}",
            p.gamma
        )));
    }
    if p.rabi < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rabi must be >= 0, got {}",
            p.rabi
        )));
    }
    let half_rabi = p.rabi / 2.0;
    let h = DenseOperator::from_rows(&[
        vec![(-p.detuning, 0.0), (half_rabi, 0.0)],
        vec![(half_rabi, 0.0), (0.0, 0.0)],
    ])?;
    let mut decay = DenseOperator::zeros(2);
    // sqrt(Gamma) |g><e|
    let decay_entries = decay.entries().clone();
    let mut m = decay_entries;
    m[[1, 0]] = c(p.gamma.sqrt(), 0.0);
    decay = DenseOperator::from_matrix(m)?;
    LindbladModel::new(h, vec![decay])
}

/// Damped cavity mode truncated at `n_max` Fock states (dimension `n_max+1`).
#[derive(Debug, Clone, Copy)]
pub struct CavityParams {
    /// Cavity decay rate `kappa`.
    pub kappa: f64,
    /// Fock-space truncation: basis `|0> ... |n_max>`.
    pub n_max: usize,
    /// Linear drive amplitude; `H_S = drive (a + a^dag)`.
    pub drive: f64,
}

/// Annihilation operator on the truncated Fock basis: `a|n> = sqrt(n)|n-1>`.
pub fn annihilation_operator(dim: usize) -> DenseOperator {
    let mut m = ndarray::Array2::zeros((dim, dim));
    for n in 1..dim {
        m[[n - 1, n]] = c((n as f64).sqrt(), 0.0);
    }
    DenseOperator::from_matrix(m).expect("square by construction")
}

/// `H_S = drive (a + a^dag)`, one channel `C_1 = sqrt(kappa) a`.
///
/// The truncation is a hard cutoff: choose `n_max` so the population of
/// `|n_max>` stays below 1e-6 over the run.
pub fn damped_cavity_model(p: &CavityParams) -> Result<LindbladModel> {
    if p.kappa <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa must be > 0, got {}",
            p.kappa
        )));
    }
    if p.n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    if p.drive < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "drive must be >= 0, got {}",
            p.drive
        )));
    }
    let dim = p.n_max + 1;
    let a = annihilation_operator(dim);
    let h = a.add(&a.dagger()).scale(c(p.drive, 0.0));
    let decay = a.scale(c(p.kappa.sqrt(), 0.0));
    LindbladModel::new(h, vec![decay])
}

/// Three-level V system: ground `|g>` driven to a strongly decaying `|s>`
/// and to a weakly decaying (shelving) `|w>`.
///
/// Basis order is `(|g>, |s>, |w>)`; channel 0 is the strong decay.
#[derive(Debug, Clone, Copy)]
pub struct ThreeLevelParams {
    pub gamma_strong: f64,
    pub gamma_weak: f64,
    pub rabi_strong: f64,
    pub rabi_weak: f64,
}

pub fn three_level_model(p: &ThreeLevelParams) -> Result<LindbladModel> {
    if !(p.gamma_strong > p.gamma_weak && p.gamma_weak > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need gamma_strong > gamma_weak > 0, got {} and {}",
            p.gamma_strong, p.gamma_weak
        )));
    }
    let hs = p.rabi_strong / 2.0;
    let hw = p.rabi_weak / 2.0;
    let h = DenseOperator::from_rows(&[
        vec![(0.0, 0.0), (hs, 0.0), (hw, 0.0)],
        vec![(hs, 0.0), (0.0, 0.0), (0.0, 0.0)],
        vec![(hw, 0.0), (0.0, 0.0), (0.0, 0.0)],
    ])?;
    let strong = DenseOperator::ketbra(3, 0, 1)?.scale(c(p.gamma_strong.sqrt(), 0.0));
    let weak = DenseOperator::ketbra(3, 0, 2)?.scale(c(p.gamma_weak.sqrt(), 0.0));
    LindbladModel::new(h, vec![strong, weak])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_level_rejects_bad_params() {
        assert!(two_level_model(&TwoLevelParams {
            gamma: 0.0,
            rabi: 0.0,
            detuning: 0.0
        })
        .is_err());
        assert!(two_level_model(&TwoLevelParams {
            gamma: 1.0,
            rabi: -1.0,
            detuning: 0.0
        })
        .is_err());
    }

    #[test]
    fn two_level_structure() {
        let m = two_level_model(&TwoLevelParams {
            gamma: 4.0,
            rabi: 3.0,
            detuning: -2.0,
        })
        .unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.n_channels(), 1);
        assert_abs_diff_eq!(m.hamiltonian().entries()[[0, 0]].re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.hamiltonian().entries()[[0, 1]].re, 1.5, epsilon = 1e-15);
        // C = sqrt(Gamma)|g><e| = 2 |g><e|
        assert_abs_diff_eq!(m.jump_ops()[0].entries()[[1, 0]].re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn annihilation_matrix_elements() {
        let a = annihilation_operator(4);
        for n in 1..4usize {
            assert_abs_diff_eq!(
                a.entries()[[n - 1, n]].re,
                (n as f64).sqrt(),
                epsilon = 1e-15
            );
        }
        // a^dag a = number operator
        let num = a.dagger().matmul(&a);
        for n in 0..4usize {
            assert_abs_diff_eq!(num.entries()[[n, n]].re, n as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn cavity_with_n_max_1_matches_two_level_rates() {
        let cavity = damped_cavity_model(&CavityParams {
            kappa: 1.0,
            n_max: 1,
            drive: 0.0,
        })
        .unwrap();
        // In the (|0>, |1>) basis the single channel is sqrt(kappa)|0><1|,
        // the mirror image of the two-level decay in its (|e>, |g>) basis.
        assert_eq!(cavity.dim(), 2);
        assert_abs_diff_eq!(
            cavity.jump_ops()[0].entries()[[0, 1]].re,
            1.0,
            epsilon = 1e-15
        );
        let h_eff = crate::model::effective_hamiltonian(&cavity);
        assert_abs_diff_eq!(h_eff.entries()[[1, 1]].im, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn three_level_structure_and_validation() {
        assert!(three_level_model(&ThreeLevelParams {
            gamma_strong: 1.0,
            gamma_weak: 1.0,
            rabi_strong: 0.5,
            rabi_weak: 0.1
        })
        .is_err());
        let m = three_level_model(&ThreeLevelParams {
            gamma_strong: 1.0,
            gamma_weak: 1e-3,
            rabi_strong: 0.5,
            rabi_weak: 1e-3,
        })
        .unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.n_channels(), 2);
        assert_abs_diff_eq!(m.jump_ops()[0].entries()[[0, 1]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            m.jump_ops()[1].entries()[[0, 2]].re,
            (1e-3f64).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn presets_pass_model_invariants() {
        // constructors go through LindbladModel::new, which enforces the
        // Hermiticity and dimension invariants; spot-check Hermiticity here
        let models = [
            two_level_model(&TwoLevelParams {
                gamma: 1.0,
                rabi: 3.0,
                detuning: 0.0,
            })
            .unwrap(),
            damped_cavity_model(&CavityParams {
                kappa: 0.5,
                n_max: 5,
                drive: 0.3,
            })
            .unwrap(),
            three_level_model(&ThreeLevelParams {
                gamma_strong: 1.0,
                gamma_weak: 1e-3,
                rabi_strong: 0.5,
                rabi_weak: 1e-3,
            })
            .unwrap(),
        ];
        for m in &models {
            assert!(m.hamiltonian().is_hermitian(1e-12));
        }
    }
}
