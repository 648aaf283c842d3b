//! The classical side: Gaussian fields on the cutoff space, the Hartree
//! functional D_P and reweighted Monte-Carlo estimators for ν_P.

mod field;
mod hartree;
mod mc;

pub use field::{sample_chunk, sample_chunk_scaled, sample_gaussian, Field, CHUNK};
pub use hartree::{hartree_dp, pair_density, trace_inverse_h, Hartree};
pub use mc::{
    accumulate, cutoff_stability, mc_correlation, mc_moment, mc_observables, mc_partition, plain_estimates,
    ratio_estimates, tensor_power, CorrelationEstimate, CutoffRow, McEstimate, McSpec, Sums,
};
