//! Momentum lattice Z², the fractional Bessel kernel and certified lattice sums.

mod kernel;
mod modes;
mod sums;
pub mod sweeps;

pub use kernel::{
    analytic_floor, kernel_coeff, kernel_lower_bound, kernel_realspace_fourier,
    kernel_realspace_heat, kernel_realspace_heat_detailed, two_route_grid, FourierKernel, HeatQuad,
    Interaction, KernelParams, LowerBound, TwoRoutePoint,
};
pub use modes::{dispersion, mode_set, Mode, ModeSet};
pub use sums::{
    conv_sum_s, conv_sum_s_trunc, exchange_sum, radial_power_tail, shifted_sum,
    shifted_sum_with, Truncation,
};

use serde::{Deserialize, Serialize};

/// A finite approximation of an infinite sum together with a rigorous bound
/// on what was left out: the true value lies in `value ± tail_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl CertifiedValue {
    pub fn exact(value: f64) -> Self {
        Self { value, tail_bound: 0.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tail_bound
    }
}

impl std::ops::Add for CertifiedValue {
    type Output = CertifiedValue;
    fn add(self, o: Self) -> Self {
        CertifiedValue { value: self.value + o.value, tail_bound: self.tail_bound + o.tail_bound }
    }
}
