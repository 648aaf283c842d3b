use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{CertifiedValue, Mode};
use crate::{Error, Result, TORUS_AREA};

const DIAGONAL_RADIUS: f64 = 1e-9;

/// Exponent β of the kernel ⟨k⟩^{-β}, restricted to (3/2, 2].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct KernelParams {
    beta: f64,
}

impl KernelParams {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 1.5 && beta <= 2.0 {
            Ok(Self { beta })
        } else {
            Err(Error::InvalidParam(format!("beta = {beta} is outside (3/2, 2]")))
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl TryFrom<f64> for KernelParams {
    type Error = Error;
    fn try_from(beta: f64) -> Result<Self> {
        Self::new(beta)
    }
}

impl From<KernelParams> for f64 {
    fn from(p: KernelParams) -> f64 {
        p.beta
    }
}

/// Fourier coefficient ⟨k⟩^{-β} = (1+|k|²)^{-β/2}.
pub fn kernel_coeff(k: Mode, params: KernelParams) -> f64 {
    (1.0 + k.norm_sq() as f64).powf(-0.5 * params.beta)
}

/// The pair interaction used by operator builders: either the Bessel kernel
/// or switched off entirely (which also removes the zero-mode square).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Interaction {
    Bessel(KernelParams),
    Off,
}

impl Interaction {
    pub fn coeff(&self, k: Mode) -> f64 {
        match self {
            Interaction::Bessel(p) => kernel_coeff(k, *p),
            Interaction::Off => 0.0,
        }
    }

    /// λ²/(2(2π)²), or zero when the interaction is off.
    pub fn prefactor(&self, lambda: f64) -> f64 {
        match self {
            Interaction::Bessel(_) => crate::pair_prefactor(lambda),
            Interaction::Off => 0.0,
        }
    }
}

fn reduce_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x.rem_euclid(two_pi);
    if y > PI {
        y -= two_pi;
    }
    y
}

fn check_off_diagonal(x: [f64; 2]) -> Result<[f64; 2]> {
    let y = [reduce_angle(x[0]), reduce_angle(x[1])];
    if y[0].abs() < DIAGONAL_RADIUS && y[1].abs() < DIAGONAL_RADIUS {
        return Err(Error::OnDiagonal(x[0], x[1]));
    }
    Ok(y)
}

/// Square partial sums of the Fourier series with a cached coefficient table.
///
/// The truncation is the box |k|_∞ ≤ R. Because the series only converges
/// conditionally for β ≤ 2, the tail bound comes from two-dimensional summation
/// by parts against Dirichlet kernels, which needs the mixed differences of
/// (n, m) ↦ ⟨(n, m)⟩^{-β} to be nonnegative (true since s ↦ (1+s)^{-β/2} is convex).
#[derive(Clone, Debug)]
pub struct FourierKernel {
    params: KernelParams,
    radius: usize,
    table: Vec<f64>,
}

impl FourierKernel {
    pub fn new(params: KernelParams, radius: usize) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParam("fourier radius must be >= 1".into()));
        }
        let n_max = 2 * radius * radius;
        let table = (0..=n_max).map(|n| (1.0 + n as f64).powf(-0.5 * params.beta)).collect();
        Ok(Self { params, radius, table })
    }

    fn f(&self, n: usize, m: usize) -> f64 {
        (1.0 + (n * n + m * m) as f64).powf(-0.5 * self.params.beta)
    }

    /// Returns the certified real value and the imaginary residual of the partial sum.
    pub fn eval(&self, x: [f64; 2]) -> Result<(CertifiedValue, f64)> {
        let y = check_off_diagonal(x)?;
        let r = self.radius as i64;
        let phase = |t: f64| -> Vec<C64> { (-r..=r).map(|j| C64::from_polar(1.0, j as f64 * t)).collect() };
        let (c1, c2) = (phase(y[0]), phase(y[1]));
        let mut total = C64::new(0.0, 0.0);
        for (a, j) in (-r..=r).enumerate() {
            let jj = (j * j) as usize;
            let mut row = C64::new(0.0, 0.0);
            for (b, l) in (-r..=r).enumerate() {
                row += c2[b] * self.table[jj + (l * l) as usize];
            }
            total += c1[a] * row;
        }
        let total = total / TORUS_AREA;
        Ok((CertifiedValue { value: total.re, tail_bound: self.tail_bound(y) }, total.im))
    }

    fn tail_bound(&self, y: [f64; 2]) -> f64 {
        let beta = self.params.beta;
        let rad = self.radius;
        let s1 = (0.5 * y[0]).sin().abs();
        let s2 = (0.5 * y[1]).sin().abs();
        if s1 > DIAGONAL_RADIUS && s2 > DIAGONAL_RADIUS {
            let edge = self.f(rad, 0);
            return 2.0 * (2.0 * edge - self.f(rad, rad)) / (s1 * s2) / TORUS_AREA;
        }
        // On an axis the non-oscillating coordinate is summed directly and only
        // the other one is treated by summation by parts.
        let s = s1.max(s2);
        let rf = rad as f64;
        let column_tail = 2.0 * rf.powf(1.0 - beta) / (beta - 1.0);
        let a = (1.0 + (rf + 1.0).powi(2)).sqrt();
        let line = a.powf(-beta)
            + a.powf(1.0 - beta) * PI.sqrt() * gamma(0.5 * (beta - 1.0)) / gamma(0.5 * beta);
        (column_tail + 2.0 * line) / s / TORUS_AREA
    }
}

/// Real-space kernel by symmetric box partial sums of its Fourier series.
pub fn kernel_realspace_fourier(
    x: [f64; 2],
    params: KernelParams,
    radius: usize,
) -> Result<CertifiedValue> {
    FourierKernel::new(params, radius)?.eval(x).map(|(v, _)| v)
}

/// Quadrature settings for the subordination integral.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HeatQuad {
    /// Absolute error target for the whole integral.
    pub tol: f64,
    /// Upper end of the numerical t-range; the rest is bounded analytically.
    pub t_max: f64,
}

impl Default for HeatQuad {
    fn default() -> Self {
        Self { tol: 1e-11, t_max: 40.0 }
    }
}

fn image_sum(y: f64, t: f64) -> f64 {
    (-3..=3).map(|j| (-(y + 2.0 * PI * j as f64).powi(2) / (4.0 * t)).exp()).sum()
}

fn theta_sum(y: f64, t: f64) -> f64 {
    1.0 + 2.0 * (1..=6).map(|j| (-t * (j * j) as f64).exp() * (j as f64 * y).cos()).sum::<f64>()
}

/// Heat-kernel (subordination) evaluation, returning (value, error estimate).
pub fn kernel_realspace_heat_detailed(
    x: [f64; 2],
    params: KernelParams,
    quad: &HeatQuad,
) -> Result<(f64, f64)> {
    let y = check_off_diagonal(x)?;
    let a = 0.5 * params.beta - 1.0;
    let small = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        t.powf(a) * (-t).exp() * image_sum(y[0], t) * image_sum(y[1], t) / (4.0 * PI * t)
    };
    let large = |t: f64| t.powf(a) * (-t).exp() * theta_sum(y[0], t) * theta_sum(y[1], t) / TORUS_AREA;

    let t0 = 0.25 * (y[0] * y[0] + y[1] * y[1]);
    let mut cuts = vec![0.0];
    for c in [t0 / 8.0, t0, 4.0 * t0] {
        if c > *cuts.last().unwrap() && c < 1.0 {
            cuts.push(c);
        }
    }
    cuts.push(1.0);
    let pieces = cuts.len() as f64 + 3.0;
    let target = quad.tol / pieces;
    let mut value = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let o = quadrature::integrate(small, w[0], w[1], target);
        value += o.integral;
        err += o.error_estimate;
    }
    let mid = 1.0 + 0.25 * (quad.t_max - 1.0);
    for (lo, hi) in [(1.0, mid), (mid, quad.t_max)] {
        let o = quadrature::integrate(large, lo, hi, target);
        value += o.integral;
        err += o.error_estimate;
    }
    // For t ≥ t_max: t^{β/2-1} ≤ 1 and θ(y,t) ≤ θ(0,t_max).
    err += theta_sum(0.0, quad.t_max).powi(2) * (-quad.t_max).exp() / TORUS_AREA;
    let g = gamma(0.5 * params.beta);
    let (value, err) = (value / g, err / g);
    if !(err <= quad.tol) {
        return Err(Error::Quadrature { target: quad.tol, achieved: err });
    }
    Ok((value, err))
}

/// Real-space kernel v_β(x) by the heat-kernel subordination integral.
pub fn kernel_realspace_heat(x: [f64; 2], params: KernelParams, quad: &HeatQuad) -> Result<f64> {
    kernel_realspace_heat_detailed(x, params, quad).map(|(v, _)| v)
}

/// The explicit floor e^{-2-π²/2}/(4πΓ(β/2)) ∫₁² t^{β/2-2} dt.
pub fn analytic_floor(params: KernelParams) -> f64 {
    let a = 0.5 * params.beta - 2.0;
    let integral = if (a + 1.0).abs() < 1e-14 { 2f64.ln() } else { (2f64.powf(a + 1.0) - 1.0) / (a + 1.0) };
    (-2.0 - 0.5 * PI * PI).exp() / (4.0 * PI * gamma(0.5 * params.beta)) * integral
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LowerBound {
    pub numeric_min: f64,
    pub argmin: [f64; 2],
    pub analytic_floor: f64,
}

/// Minimum of the heat-route kernel over a uniform grid without the origin.
pub fn kernel_lower_bound(params: KernelParams, grid_n: usize, quad: &HeatQuad) -> Result<LowerBound> {
    if grid_n < 8 {
        return Err(Error::InvalidParam(format!("grid_n = {grid_n} must be >= 8")));
    }
    let h = 2.0 * PI / grid_n as f64;
    let points: Vec<[f64; 2]> = (0..grid_n * grid_n)
        .skip(1)
        .map(|idx| [(idx / grid_n) as f64 * h, (idx % grid_n) as f64 * h])
        .collect();
    let values = points
        .par_iter()
        .map(|&x| kernel_realspace_heat(x, params, quad))
        .collect::<Result<Vec<f64>>>()?;
    let (i, &numeric_min) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid has at least one point");
    Ok(LowerBound { numeric_min, argmin: points[i], analytic_floor: analytic_floor(params) })
}

/// Both evaluation routes at one grid point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TwoRoutePoint {
    pub x: [f64; 2],
    pub heat: f64,
    pub heat_err: f64,
    pub fourier: CertifiedValue,
    /// Imaginary part of the Fourier partial sum, zero up to rounding.
    pub fourier_imag: f64,
}

impl TwoRoutePoint {
    pub fn diff(&self) -> f64 {
        (self.heat - self.fourier.value).abs()
    }

    /// Sum of the two certified error budgets.
    pub fn tolerance(&self) -> f64 {
        self.heat_err + self.fourier.tail_bound
    }

    pub fn agrees(&self) -> bool {
        self.diff() <= self.tolerance()
    }
}

/// Heat and Fourier values on the uniform n×n grid of the torus, origin excluded.
pub fn two_route_grid(params: KernelParams, grid_n: usize, radius: usize, quad: &HeatQuad) -> Result<Vec<TwoRoutePoint>> {
    let fourier = FourierKernel::new(params, radius)?;
    let h = 2.0 * PI / grid_n as f64;
    (1..grid_n * grid_n)
        .into_par_iter()
        .map(|idx| {
            let x = [(idx / grid_n) as f64 * h, (idx % grid_n) as f64 * h];
            let (heat, heat_err) = kernel_realspace_heat_detailed(x, params, quad)?;
            let (fourier, fourier_imag) = fourier.eval(x)?;
            Ok(TwoRoutePoint { x, heat, heat_err, fourier, fourier_imag })
        })
        .collect()
}
