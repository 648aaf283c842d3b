//! Bound-ratio sweeps for the lattice-sum estimates.
//!
//! Each sweep evaluates a sum along a one-parameter family and divides by the
//! predicted decay profile. The constants in those bounds are not known, so the
//! sweeps only measure the ratio's spread and whether it drifts upward.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{conv_sum_s, conv_sum_s_trunc, dispersion, shifted_sum_with, KernelParams, Mode, Truncation};
use crate::Result;

pub const K_GRID: &[i32] = &[0, 1, 2, 3, 5, 8, 12, 16, 20, 25, 30, 40, 50, 60, 70, 80, 90, 100];
pub const K_GRID_EXTENDED: &[i32] =
    &[0, 1, 2, 3, 5, 8, 12, 16, 20, 25, 30, 40, 50, 60, 70, 80, 90, 100, 120, 150, 200];
pub const L_GRID: &[f64] = &[4.0, 8.0, 16.0, 32.0];
pub const ELL_GRID: &[i32] = &[0, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40, 44, 48, 52, 56, 60, 64];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: Mode,
    /// Secondary sweep parameter (L for truncated sums), 0 otherwise.
    pub l: f64,
    pub value: f64,
    pub tail_bound: f64,
    /// Partial sum plus the continuum integral over the omitted region.
    pub estimate: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioSummary {
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub first_decile_max: f64,
    pub last_decile_max: f64,
}

impl RatioSummary {
    pub fn from_ratios(r: &[f64]) -> Self {
        let min = r.iter().copied().fold(f64::INFINITY, f64::min);
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let d = r.len().div_ceil(10).max(1);
        let fmax = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        RatioSummary {
            min,
            max,
            spread: max / min,
            first_decile_max: fmax(&r[..d]),
            last_decile_max: fmax(&r[r.len() - d..]),
        }
    }

    /// Spread below `max_spread` and no upward drift beyond a factor 2.
    pub fn passes(&self, max_spread: f64) -> bool {
        self.spread < max_spread && self.last_decile_max <= 2.0 * self.first_decile_max
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepTable {
    pub name: String,
    pub rows: Vec<SweepRow>,
    pub summary: RatioSummary,
}

impl SweepTable {
    fn new(name: &str, rows: Vec<SweepRow>) -> Self {
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        SweepTable { name: name.to_string(), summary: RatioSummary::from_ratios(&ratios), rows }
    }
}

/// ∫_{|u|>R} h(u+k)^{-s} h(u)^{-s} du in polar coordinates (trapezoid in angle,
/// double-exponential in r = R/t).
fn exterior_integral(k: Mode, s: f64, radius: f64) -> f64 {
    const N_THETA: usize = 256;
    let (k1, k2) = (k.0 as f64, k.1 as f64);
    let radial = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let r = radius / t;
        let mut acc = 0.0;
        for j in 0..N_THETA {
            let th = 2.0 * PI * j as f64 / N_THETA as f64;
            let (u1, u2) = (r * th.cos(), r * th.sin());
            let hk = 1.0 + (u1 + k1).powi(2) + (u2 + k2).powi(2);
            acc += (hk * (1.0 + r * r)).powf(-s);
        }
        acc * 2.0 * PI / N_THETA as f64 * radius * radius / (t * t * t)
    };
    quadrature::integrate(radial, 0.0, 1.0, 1e-12).integral
}

fn radius_for(n: i32) -> usize {
    (8 * n.unsigned_abs() as usize).max(400)
}

/// Ratio S_k(1)·(1+|k|²)/log(2+|k|) along k = (n, 0).
pub fn sweep_exchange_log(ns: &[i32]) -> Result<SweepTable> {
    let rows = ns
        .par_iter()
        .map(|&n| {
            let k = Mode(n, 0);
            let radius = radius_for(n);
            let v = conv_sum_s(k, 1.0, Truncation { radius })?;
            let estimate = v.value + exterior_integral(k, 1.0, radius as f64);
            let ratio = estimate * dispersion(k) / (2.0 + k.norm()).ln();
            Ok(SweepRow { k, l: 0.0, value: v.value, tail_bound: v.tail_bound, estimate, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::new("exchange_log", rows))
}

/// Ratio S_k(s)·⟨k⟩^{4s-2} along k = (n, 0), for 1/2 < s < 1.
pub fn sweep_sk(s: f64, ns: &[i32]) -> Result<SweepTable> {
    let rows = ns
        .par_iter()
        .map(|&n| {
            let k = Mode(n, 0);
            let radius = radius_for(n);
            let v = conv_sum_s(k, s, Truncation { radius })?;
            let estimate = v.value + exterior_integral(k, s, radius as f64);
            let ratio = estimate * dispersion(k).powf(2.0 * s - 1.0);
            Ok(SweepRow { k, l: 0.0, value: v.value, tail_bound: v.tail_bound, estimate, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::new("sk", rows))
}

/// Ratio S_k^{(L)}(s)·⟨k⟩^{2s}/L^{2-2s} over k = (n, 0) and the given L values.
pub fn sweep_skl(s: f64, ns: &[i32], ls: &[f64]) -> Result<SweepTable> {
    let grid: Vec<(i32, f64)> = ns.iter().flat_map(|&n| ls.iter().map(move |&l| (n, l))).collect();
    let rows = grid
        .par_iter()
        .map(|&(n, l)| {
            let k = Mode(n, 0);
            let value = conv_sum_s_trunc(k, s, l)?;
            let ratio = value * dispersion(k).powf(s) / l.powf(2.0 - 2.0 * s);
            Ok(SweepRow { k, l, value, tail_bound: 0.0, estimate: value, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::new("skl", rows))
}

/// Ratio of the shifted kernel sum to ⟨ℓ⟩^{-2s₁} along ℓ = (n, 0).
pub fn sweep_shifted(params: KernelParams, s1: f64, s2: f64, ns: &[i32]) -> Result<SweepTable> {
    let rows = ns
        .par_iter()
        .map(|&n| {
            let ell = Mode(n, 0);
            let radius = radius_for(n).min(512).max(2 * n.unsigned_abs() as usize);
            let v = shifted_sum_with(ell, s1, s2, params, Truncation { radius })?;
            let ratio = v.value * dispersion(ell).powf(s1);
            Ok(SweepRow { k: ell, l: 0.0, value: v.value, tail_bound: v.tail_bound, estimate: v.value, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable::new("shifted", rows))
}
