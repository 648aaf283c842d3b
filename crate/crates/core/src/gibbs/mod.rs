//! Gibbs states of sector-block Hamiltonians and their diagnostics.

mod diagnostics;
mod reduced;
mod state;

pub use diagnostics::{
    fluctuation, free_energy_diff, free_energy_of, hf_diagnostics, hf_masks, product_trial_hf0, wick_check,
    FreeEnergy, FreeEnergyOptions, HfRecord, ProductTrialHf, WickRecord,
};
pub use reduced::{reduced_density, sym_isometry, sym_pairs, two_body_sym, ReducedDensity};
pub use state::{expectation, gibbs, GibbsState};
