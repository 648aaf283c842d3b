//! Quantum–classical comparison: coherent states, Husimi functions, the de
//! Finetti moment identities and convergence tables.

mod coherent;
mod definetti;
mod report;

pub use coherent::{coherent_amplitudes, husimi_moments, CoherentVector, HusimiMoments, HusimiSampler};
pub use definetti::{definetti_matrices, definetti_moment, hs_distance, DeFinettiMatrices};
pub use report::{convergence_report, ClassicalReference, ConvergenceOptions, ConvergenceRow};
