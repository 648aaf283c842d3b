use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use super::{dispersion, CertifiedValue, KernelParams, Mode};
use crate::{Error, Result};

/// Disc truncation |u| ≤ radius for an infinite lattice sum.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Truncation {
    pub radius: usize,
}

/// Certified bound on Σ_{|u| > R} c·|u|^{-a} over u ∈ Z², for a > 2.
///
/// Each lattice point owns a unit square whose points y satisfy
/// |y| ≤ |u| + 1/√2, so the sum is dominated by ∫_{|y|>R-δ} c(|y|-δ)^{-a} dy.
pub fn radial_power_tail(c: f64, a: f64, radius: f64) -> f64 {
    let delta = FRAC_1_SQRT_2;
    let w0 = radius - 2.0 * delta;
    assert!(a > 2.0 && w0 > 0.0, "radial tail needs a > 2 and radius > √2");
    2.0 * PI * c * (w0.powf(2.0 - a) / (a - 2.0) + delta * w0.powf(1.0 - a) / (a - 1.0))
}

fn disc_sum(radius: usize, include_zero: bool, term: impl Fn(Mode) -> f64) -> f64 {
    let r = radius as i32;
    let r2 = (radius * radius) as i64;
    let mut total = 0.0;
    for a in -r..=r {
        let mut row = 0.0;
        for b in -r..=r {
            let u = Mode(a, b);
            if u.norm_sq() <= r2 && (include_zero || u != Mode::ZERO) {
                row += term(u);
            }
        }
        total += row;
    }
    total
}

fn check_radius(radius: usize, shift: Mode) -> Result<()> {
    if (radius as f64) < 2.0 * shift.norm() || radius < 2 {
        return Err(Error::InvalidParam(format!(
            "radius {radius} must be at least max(2, 2|k|) = {}",
            (2.0 * shift.norm()).max(2.0)
        )));
    }
    Ok(())
}

/// S_k(s) = Σ_u h(u+k)^{-s} h(u)^{-s}, certified.
pub fn conv_sum_s(k: Mode, s: f64, trunc: Truncation) -> Result<CertifiedValue> {
    if s <= 0.5 {
        return Err(Error::DivergentSum(s));
    }
    check_radius(trunc.radius, k)?;
    let value = if s == 1.0 {
        disc_sum(trunc.radius, true, |u| 1.0 / (dispersion(u + k) * dispersion(u)))
    } else {
        disc_sum(trunc.radius, true, |u| (dispersion(u + k) * dispersion(u)).powf(-s))
    };
    // |u| > R ≥ 2|k| gives h(u+k) ≥ |u|²/4 and h(u) ≥ |u|².
    let tail_bound = radial_power_tail(4f64.powf(s), 4.0 * s, trunc.radius as f64);
    Ok(CertifiedValue { value, tail_bound })
}

/// Σ_p 1/(h(p+k) h(p)), i.e. S_k(1).
pub fn exchange_sum(k: Mode, trunc: Truncation) -> Result<CertifiedValue> {
    conv_sum_s(k, 1.0, trunc)
}

/// The finite sum S_k^{(L)}(s) over h(u) ≤ L².
pub fn conv_sum_s_trunc(k: Mode, s: f64, l: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParam(format!("s = {s} must lie in (0, 1)")));
    }
    if l < 1.0 {
        return Err(Error::InvalidParam(format!("L = {l} must be >= 1")));
    }
    let l2 = l * l;
    let r = (l2 - 1.0).sqrt().floor() as usize;
    Ok(disc_sum(r, true, |u| {
        if dispersion(u) <= l2 {
            (dispersion(u + k) * dispersion(u)).powf(-s)
        } else {
            0.0
        }
    }))
}

/// Σ_{k≠0} ⟨k⟩^{-2β}⟨k+ℓ⟩^{-2s₁}⟨ℓ-k⟩^{-2s₂} with an explicit truncation.
pub fn shifted_sum_with(
    ell: Mode,
    s1: f64,
    s2: f64,
    params: KernelParams,
    trunc: Truncation,
) -> Result<CertifiedValue> {
    if !(s1 > 0.0 && s1 <= s2 && s2 < 1.0) {
        return Err(Error::InvalidParam(format!("need 0 < s1 <= s2 < 1, got s1 = {s1}, s2 = {s2}")));
    }
    check_radius(trunc.radius, ell)?;
    let beta = params.beta();
    let value = disc_sum(trunc.radius, false, |k| {
        dispersion(k).powf(-beta) * dispersion(k + ell).powf(-s1) * dispersion(ell - k).powf(-s2)
    });
    let tail_bound = radial_power_tail(
        4f64.powf(s1 + s2),
        2.0 * (beta + s1 + s2),
        trunc.radius as f64,
    );
    Ok(CertifiedValue { value, tail_bound })
}

/// [`shifted_sum_with`] at radius max(64, 2|ℓ|).
pub fn shifted_sum(ell: Mode, s1: f64, s2: f64, params: KernelParams) -> Result<CertifiedValue> {
    let radius = (2.0 * ell.norm()).ceil().max(64.0) as usize;
    shifted_sum_with(ell, s1, s2, params, Truncation { radius })
}
