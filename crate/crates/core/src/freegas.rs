//! The non-interacting Bose gas at inverse temperature λ with dispersion h.
//!
//! Infinite sums over Z² are certified: the occupations are dominated by
//! e^{-λh}/(1-e^{-λ}), whose lattice tail has a closed form.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::lattice::{dispersion, CertifiedValue, Interaction, Mode, ModeSet};
use crate::{Error, Result};

/// A spectral region, by thresholds on h.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    All,
    /// h ≤ Λ².
    Below(f64),
    /// Λ² < h ≤ Λ₁².
    Between(f64, f64),
    /// h > Λ².
    Above(f64),
}

impl Region {
    pub fn contains_h(&self, h: f64) -> bool {
        match *self {
            Region::All => true,
            Region::Below(c) => h <= c,
            Region::Between(a, b) => h > a && h <= b,
            Region::Above(a) => h > a,
        }
    }

    pub fn contains(&self, p: Mode) -> bool {
        self.contains_h(dispersion(p))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::All => true,
            Region::Below(c) | Region::Above(c) => c >= 1.0,
            Region::Between(a, b) => a >= 1.0 && b >= a,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("inconsistent region {self:?}")))
        }
    }

    fn upper(&self) -> Option<f64> {
        match *self {
            Region::Below(c) => Some(c),
            Region::Between(_, b) => Some(b),
            _ => None,
        }
    }
}

/// Bose occupation 1/(e^{λh}-1).
pub fn occupation(lambda: f64, p: Mode) -> f64 {
    occupation_h(lambda, dispersion(p))
}

fn occupation_h(lambda: f64, h: f64) -> f64 {
    let x = lambda * h;
    if x > 40.0 {
        let e = (-x).exp();
        e * (1.0 + e)
    } else {
        1.0 / x.exp_m1()
    }
}

/// Bound on Σ_{|p|>ρ} e^{-λh(p)} by integral comparison with a half-diagonal shift.
fn gaussian_lattice_tail(lambda: f64, rho: f64) -> f64 {
    let delta = FRAC_1_SQRT_2;
    let w0 = rho - 2.0 * delta;
    assert!(w0 > 0.0);
    let sl = lambda.sqrt();
    2.0 * PI
        * (-lambda).exp()
        * ((-lambda * w0 * w0).exp() / (2.0 * lambda) + delta * 0.5 * (PI / lambda).sqrt() * erfc(sl * w0))
}

/// Σ over lattice points of the region of `term(h)`, with `term(h) ≤ coeff·e^{-λh}`
/// used to certify the omitted part of infinite regions.
fn certified_region_sum(lambda: f64, region: Region, coeff: f64, term: impl Fn(f64) -> f64) -> Result<CertifiedValue> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam(format!("lambda = {lambda} must be positive")));
    }
    region.validate()?;
    let (h_top, infinite) = match region.upper() {
        Some(c) => (c, false),
        None => {
            let base = match region {
                Region::Above(a) => a,
                _ => 1.0,
            };
            (base + 60.0 / lambda + 8.0, true)
        }
    };
    let rho2 = h_top - 1.0;
    let r = rho2.max(0.0).sqrt().floor() as i32;
    let mut value = 0.0;
    for a in -r..=r {
        let mut row = 0.0;
        for b in -r..=r {
            let h = dispersion(Mode(a, b));
            if h <= h_top && region.contains_h(h) {
                row += term(h);
            }
        }
        value += row;
    }
    let tail_bound = if infinite { coeff * gaussian_lattice_tail(lambda, rho2.sqrt()) } else { 0.0 };
    Ok(CertifiedValue { value, tail_bound })
}

fn geometric_constant(lambda: f64) -> f64 {
    1.0 / (-(-lambda).exp_m1())
}

/// Σ_{p ∈ region} n_p.
pub fn free_number(lambda: f64, region: Region) -> Result<CertifiedValue> {
    certified_region_sum(lambda, region, geometric_constant(lambda), |h| occupation_h(lambda, h))
}

/// −Σ_{p ∈ region} log(1 − e^{-λh(p)}).
pub fn free_log_partition(lambda: f64, region: Region) -> Result<CertifiedValue> {
    certified_region_sum(lambda, region, geometric_constant(lambda), |h| -(-(-lambda * h).exp()).ln_1p())
}

fn cumulant_terms(n: f64) -> [f64; 4] {
    let v = n * (1.0 + n);
    [n, v, v * (1.0 + 2.0 * n), v * (1.0 + 6.0 * n + 6.0 * n * n)]
}

/// First four cumulants of the total number in the region: the mode
/// occupations are independent geometric variables.
pub fn free_number_cumulants(lambda: f64, region: Region) -> Result<[CertifiedValue; 4]> {
    let c = geometric_constant(lambda);
    let coeffs = [c, c * c, 2.0 * c.powi(3), 6.0 * c.powi(4)];
    let mut out = [CertifiedValue::exact(0.0); 4];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = certified_region_sum(lambda, region, coeffs[j], |h| cumulant_terms(occupation_h(lambda, h))[j])?;
    }
    Ok(out)
}

/// Exact cumulants of the number restricted to a finite list of modes.
pub fn mode_cumulants(lambda: f64, modes: impl IntoIterator<Item = Mode>) -> [f64; 4] {
    let mut k = [0.0; 4];
    for p in modes {
        for (acc, t) in k.iter_mut().zip(cumulant_terms(occupation(lambda, p))) {
            *acc += t;
        }
    }
    k
}

/// N_{0,P} = Σ_{p ∈ modes} n_p.
pub fn mode_number(lambda: f64, modes: impl IntoIterator<Item = Mode>) -> f64 {
    modes.into_iter().map(|p| occupation(lambda, p)).sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeGasReport {
    pub lambda: f64,
    pub n0: CertifiedValue,
    pub log_z: CertifiedValue,
    pub variance: CertifiedValue,
    pub cumulants: [CertifiedValue; 4],
}

pub fn free_gas_report(lambda: f64, region: Region) -> Result<FreeGasReport> {
    let cumulants = free_number_cumulants(lambda, region)?;
    Ok(FreeGasReport {
        lambda,
        n0: free_number(lambda, region)?,
        log_z: free_log_partition(lambda, region)?,
        variance: cumulants[1],
        cumulants,
    })
}

/// Z_n = Σ_{|occ| = n} Π_p e^{-ε_p n_p} for n = 0..=n_max, by convolving the
/// per-mode geometric series.
pub fn sector_partitions(energies: &[f64], n_max: usize) -> Vec<f64> {
    let mut z = vec![0.0; n_max + 1];
    z[0] = 1.0;
    for &e in energies {
        let x = (-e).exp();
        for n in 1..=n_max {
            z[n] += x * z[n - 1];
        }
    }
    z
}

/// Σ over occupation vectors with total ≤ cap of Π_p e^{-ε_p n_p}.
pub fn capped_partition(energies: &[f64], cap: usize) -> f64 {
    sector_partitions(energies, cap).iter().sum()
}

/// Truncated free partition function of λ dΓ(h) on the mode set.
pub fn capped_free_partition(modes: &ModeSet, cap: usize, lambda: f64) -> f64 {
    let e: Vec<f64> = modes.energies().iter().map(|h| lambda * h).collect();
    capped_partition(&e, cap)
}

/// Bound on Σ_{m ≥ n} C(m+K−1, K−1) x^m, which dominates the free sector
/// weights Z_m when x is the largest Boltzmann factor. The term ratio
/// r(m) = (m+K)/(m+1)·x decreases in m, so the tail is at most t_n/(1 − r(n));
/// infinite while r(n) ≥ 1.
fn geometric_tail(k: u64, x: f64, n: usize) -> f64 {
    let r = (n as f64 + k as f64) / (n as f64 + 1.0) * x;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    (statrs::function::factorial::ln_binomial(n as u64 + k - 1, k - 1) + n as f64 * x.ln()).exp() / (1.0 - r)
}

/// First n ≥ start where the geometric tail ratio is at most (1 + x)/2.
fn geometric_start(k: u64, x: f64, start: usize) -> usize {
    let target = 0.5 * (1.0 + x);
    let mut n = start;
    while (n as f64 + k as f64) / (n as f64 + 1.0) * x > target {
        n += 1;
    }
    n
}

/// Upper bound on the relative weight 1 − Z_cap/Z_∞ lost by capping a
/// quasi-free state with one-body energies ε: sectors past the cap are summed
/// directly and the remainder is closed by [`geometric_tail`].
pub fn quasi_free_cap_defect(energies: &[f64], cap: usize) -> f64 {
    if energies.is_empty() {
        return 0.0;
    }
    let log_z_inf: f64 = energies.iter().map(|e| -(-(-e).exp_m1()).ln()).sum();
    let k = energies.len() as u64;
    let x_max = energies.iter().map(|e| (-e).exp()).fold(0.0, f64::max);
    let mut n_end = geometric_start(k, x_max, cap + 1);
    loop {
        let z = sector_partitions(energies, n_end);
        let closure = geometric_tail(k, x_max, n_end);
        let tail: f64 = z[cap + 1..n_end].iter().sum::<f64>() + closure;
        if closure <= 1e-6 * tail || closure < 1e-300 {
            return (tail.ln() - log_z_inf).exp();
        }
        n_end *= 2;
    }
}

/// Precomputed bounds on the Gibbs weight Tr_n e^{-H_n} of each particle-number
/// sector of the interacting projected model.
///
/// Upper bounds: the minimum of the coercive bound e^{C'} e^{-λ²v*n²/4} A^n and
/// the bound Z_n^free e^{-c(n-n₀)² + c S n}, which follows from
/// Σ_{p,q} M_{p,q,k} = (2π)²ρ_kρ_{-k} − 𝒩 ≥ −𝒩 (S = Σ of v̂ over nonzero
/// representable momenta, c = λ²/(2(2π)²)). Lower bound: Peierls' inequality in
/// the occupation basis, whose diagonal interaction is at most c·v̂_max·n(n−1).
#[derive(Clone, Debug)]
pub struct CapAnalysis {
    upper_suffix: Vec<f64>,
    lower_prefix: Vec<f64>,
    tail: TailModel,
}

/// Dominating sequence for the sectors past the tabulated range.
#[derive(Clone, Debug)]
enum TailModel {
    /// Z_total e^{-c(n-n₀)² + c S n}, which decays at ratio ≤ 1/2 past the
    /// table, so twice its first term bounds the rest.
    Gaussian { z_total: f64, c: f64, s_v: f64, n0p: f64 },
    /// C(n+K-1, K-1) x_max^n.
    Geometric { k: u64, x_max: f64 },
}

impl TailModel {
    fn from(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            TailModel::Gaussian { z_total, c, s_v, n0p } => 2.0 * z_total * (-c * (nf - n0p).powi(2) + c * s_v * nf).exp(),
            TailModel::Geometric { k, x_max } => geometric_tail(k, x_max, n),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CapCertificate {
    pub cap: usize,
    /// Upper bound on the unnormalized weight of all sectors n > cap.
    pub defect: f64,
    /// Lower bound on the weight of the sectors n ≤ cap.
    pub z_lower: f64,
    pub relative: f64,
}

impl CapAnalysis {
    pub fn new(modes: &ModeSet, lambda: f64, interaction: Interaction, vstar: f64, n0p: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParam(format!("lambda = {lambda} must be positive")));
        }
        let eps: Vec<f64> = modes.energies().iter().map(|h| lambda * h).collect();
        let z_total: f64 = eps.iter().map(|e| 1.0 / -(-e).exp_m1()).product();
        let c = interaction.prefactor(lambda);
        if c == 0.0 {
            // Free model: exact weights, with a geometric closure taken once the
            // sector weights decay at ratio ≤ 1/2.
            let x_max = eps.iter().map(|e| (-e).exp()).fold(0.0, f64::max);
            // Z_n ≤ C(n+K-1, K-1) x_max^n, closed geometrically past n_end.
            let n_end = geometric_start(modes.len() as u64, x_max, 64) * 4;
            let z = sector_partitions(&eps, n_end);
            let tail = TailModel::Geometric { k: modes.len() as u64, x_max };
            return Ok(Self::assemble(&z, &z, tail));
        }
        let s_v: f64 = modes.nonzero_differences().iter().map(|&k| interaction.coeff(k)).sum();
        let vhat_max = modes
            .nonzero_differences()
            .iter()
            .map(|&k| interaction.coeff(k))
            .fold(0.0, f64::max);
        let exponent = |n: f64| -c * (n - n0p).powi(2) + c * s_v * n;
        // Tabulate until the closure is far below anything representable next
        // to the sector weights, and past the point where it decays geometrically.
        let ratio_start = n0p + 0.5 * (s_v - 1.0 + 2f64.ln() / c);
        let negligible = n0p + s_v + ((700.0 + z_total.ln().max(0.0)) / c).sqrt();
        let n_end = ratio_start.max(negligible).ceil().max(1.0) as usize + 1;
        let z = sector_partitions(&eps, n_end);
        let a_sum: f64 = eps.iter().map(|e| (-e).exp()).sum();
        let a = 0.5 * lambda * lambda * vstar;
        let b = c * (1.0 - 2.0 * n0p) - a;
        let c_small = c * n0p * n0p;
        let log_coercive = |n: f64| b * b / (2.0 * a) - c_small - 0.5 * a * n * n + n * a_sum.ln();
        let upper: Vec<f64> = (0..=n_end)
            .map(|n| {
                let nf = n as f64;
                let sharp = z[n] * exponent(nf).exp();
                if vstar > 0.0 {
                    sharp.min(log_coercive(nf).exp())
                } else {
                    sharp
                }
            })
            .collect();
        let lower: Vec<f64> = (0..=n_end)
            .map(|n| {
                let nf = n as f64;
                z[n] * (-c * ((nf - n0p).powi(2) + vhat_max * nf * (nf - 1.0))).exp()
            })
            .collect();
        let tail = TailModel::Gaussian { z_total, c, s_v, n0p };
        Ok(Self::assemble(&upper, &lower, tail))
    }

    fn assemble(upper: &[f64], lower: &[f64], tail: TailModel) -> Self {
        let mut upper_suffix = vec![0.0; upper.len() + 1];
        for n in (0..upper.len()).rev() {
            upper_suffix[n] = upper_suffix[n + 1] + upper[n];
        }
        let mut lower_prefix = Vec::with_capacity(lower.len());
        let mut acc = 0.0;
        for &l in lower {
            acc += l;
            lower_prefix.push(acc);
        }
        CapAnalysis { upper_suffix, lower_prefix, tail }
    }

    /// Upper bound on the total weight of sectors n > cap.
    pub fn defect(&self, cap: usize) -> f64 {
        let n_tab = self.upper_suffix.len() - 1;
        if cap + 1 >= n_tab {
            self.tail.from(cap + 1)
        } else {
            self.upper_suffix[cap + 1] + self.tail.from(n_tab)
        }
    }

    pub fn z_lower(&self, cap: usize) -> f64 {
        self.lower_prefix[cap.min(self.lower_prefix.len() - 1)]
    }

    pub fn certificate(&self, cap: usize) -> CapCertificate {
        let defect = self.defect(cap);
        let z_lower = self.z_lower(cap);
        CapCertificate { cap, defect, z_lower, relative: defect / z_lower }
    }

    /// Smallest cap whose relative defect is below `threshold`.
    pub fn smallest_cap(&self, threshold: f64, max_cap: usize) -> Result<CapCertificate> {
        (0..=max_cap)
            .map(|cap| self.certificate(cap))
            .find(|c| c.relative < threshold)
            .ok_or(Error::CapSearchFailed { max_cap, threshold })
    }
}

/// Upper bound on the unnormalized Gibbs weight of all sectors with n > cap,
/// centering the zero-mode square at N_{0,P}.
pub fn cap_defect(modes: &ModeSet, cap: usize, lambda: f64, interaction: Interaction, vstar: f64) -> Result<f64> {
    let n0p = mode_number(lambda, modes.iter());
    Ok(CapAnalysis::new(modes, lambda, interaction, vstar, n0p)?.defect(cap))
}

/// Smallest cap with relative defect below `threshold`.
pub fn certify_cap(
    modes: &ModeSet,
    lambda: f64,
    interaction: Interaction,
    vstar: f64,
    threshold: f64,
    max_cap: usize,
) -> Result<CapCertificate> {
    let n0p = mode_number(lambda, modes.iter());
    CapAnalysis::new(modes, lambda, interaction, vstar, n0p)?.smallest_cap(threshold, max_cap)
}
