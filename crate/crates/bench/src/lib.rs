//! Shared fixtures for the benchmarks.

use bosefield::{mode_set, Interaction, KernelParams, ModeSet};

/// The five-mode set h ≤ 2.
pub fn reference_modes() -> ModeSet {
    mode_set(2.0)
}

pub fn bessel(beta: f64) -> Interaction {
    Interaction::Bessel(KernelParams::new(beta).expect("beta in range"))
}
