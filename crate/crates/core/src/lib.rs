//! Numerical laboratory for a renormalized Bose gas on the torus T² with a
//! periodic fractional Bessel pair interaction.
//!
//! The crate builds the model on truncated Fock spaces (exact block
//! diagonalization), builds its finite-dimensional classical limit (a
//! reweighted Gaussian free field sampled by Monte Carlo), and compares the two
//! through coherent states and the quantum de Finetti identities.
//!
//! Modules, bottom-up:
//! - [`lattice`]: modes, kernel coefficients, real-space kernel, certified lattice sums.
//! - [`freegas`]: closed-form free Bose gas quantities and particle-cap certification.
//! - [`fock`]: truncated Fock bases and sector-block operators.
//! - [`gibbs`]: quantum Gibbs states, reduced densities, diagnostics.
//! - [`classical`]: Gaussian fields, the Hartree functional, Monte-Carlo estimators.
//! - [`bridge`]: Husimi functions, de Finetti moments, convergence tables.

pub mod bridge;
pub mod classical;
pub mod error;
pub mod fock;
pub mod freegas;
pub mod gibbs;
pub mod lattice;

pub use error::{Error, Result};
pub use lattice::{
    dispersion, kernel_coeff, mode_set, CertifiedValue, Interaction, KernelParams, Mode, ModeSet,
};
pub use num_complex::Complex64 as C64;

/// `(2π)²`, the volume of the torus.
pub const TORUS_AREA: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Two-body prefactor `λ²/(2(2π)²)` shared by the quartic operator and the
/// zero-mode square.
pub fn pair_prefactor(lambda: f64) -> f64 {
    lambda * lambda / (2.0 * TORUS_AREA)
}
