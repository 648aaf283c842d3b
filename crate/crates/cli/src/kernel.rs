//! kernel-check and sums-check.

use bosefield::lattice::sweeps::{sweep_exchange_log, sweep_shifted, sweep_sk, sweep_skl, SweepTable};
use bosefield::lattice::{analytic_floor, two_route_grid, HeatQuad, TwoRoutePoint};
use bosefield::KernelParams;
use serde::{Deserialize, Serialize};

use crate::output::{mode, num, Table};
use crate::{CliError, RunConfig, Verdict};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelBeta {
    pub beta: f64,
    pub analytic_floor: f64,
    pub numeric_min: f64,
    pub argmin: [f64; 2],
    pub points: Vec<TwoRoutePoint>,
}

impl KernelBeta {
    pub fn disagreements(&self) -> usize {
        self.points.iter().filter(|p| !p.agrees()).count()
    }

    /// Largest |fourier − heat| relative to the combined tolerance.
    pub fn worst_ratio(&self) -> f64 {
        self.points.iter().map(|p| p.diff() / p.tolerance()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelResults {
    pub grid: usize,
    pub fourier_radius: usize,
    pub betas: Vec<KernelBeta>,
    pub sweeps: Vec<SweepTable>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SumsResults {
    pub sweeps: Vec<SweepTable>,
}

pub fn run_sweeps(cfg: &RunConfig) -> Result<Vec<SweepTable>, CliError> {
    let s = &cfg.sums;
    let params = KernelParams::new(cfg.beta)?;
    Ok(vec![
        sweep_exchange_log(&s.log_k_grid)?,
        sweep_skl(s.s, &s.k_grid, &s.l_grid)?,
        sweep_sk(s.s, &s.k_grid)?,
        sweep_shifted(params, s.s1, s.s2, &s.ell_grid)?,
    ])
}

pub fn kernel_check(cfg: &RunConfig) -> Result<KernelResults, CliError> {
    let quad = HeatQuad { tol: cfg.kernel.heat_tol, ..HeatQuad::default() };
    let mut betas = Vec::new();
    for &beta in &cfg.kernel.betas {
        let params = KernelParams::new(beta)?;
        let points = two_route_grid(params, cfg.kernel.grid, cfg.kernel.fourier_radius, &quad)?;
        let best = points.iter().min_by(|a, b| a.heat.total_cmp(&b.heat)).expect("grid is non-empty");
        betas.push(KernelBeta {
            beta,
            analytic_floor: analytic_floor(params),
            numeric_min: best.heat,
            argmin: best.x,
            points,
        });
    }
    Ok(KernelResults { grid: cfg.kernel.grid, fourier_radius: cfg.kernel.fourier_radius, betas, sweeps: run_sweeps(cfg)? })
}

pub fn sums_check(cfg: &RunConfig) -> Result<SumsResults, CliError> {
    Ok(SumsResults { sweeps: run_sweeps(cfg)? })
}

fn sweep_verdicts(sweeps: &[SweepTable], cfg: &RunConfig) -> Vec<Verdict> {
    let max_spread = cfg.tolerances.sweep_spread;
    sweeps
        .iter()
        .map(|t| {
            let s = &t.summary;
            Verdict::new(
                format!("sweep_{}", t.name),
                s.passes(max_spread),
                format!(
                    "spread {} (limit {}), last-decile max {} vs first-decile max {}",
                    num(s.spread),
                    num(max_spread),
                    num(s.last_decile_max),
                    num(s.first_decile_max)
                ),
            )
        })
        .collect()
}

/// Every certified partial sum must carry a finite, nonnegative tail bound.
fn certified_sums_verdict(sweeps: &[SweepTable]) -> Verdict {
    let bad: Vec<String> = sweeps
        .iter()
        .flat_map(|t| {
            t.rows
                .iter()
                .filter(|r| !(r.value.is_finite() && r.tail_bound >= 0.0 && r.tail_bound.is_finite() && r.ratio.is_finite()))
                .map(move |r| format!("{} at k = {}", t.name, r.k))
        })
        .collect();
    Verdict::new("certified_sums", bad.is_empty(), if bad.is_empty() { "all rows finite".into() } else { bad.join("; ") })
}

pub fn kernel_verdicts(r: &KernelResults, cfg: &RunConfig) -> Vec<Verdict> {
    let mut v = Vec::new();
    for b in &r.betas {
        v.push(Verdict::new(
            format!("kernel_positivity_beta_{}", num(b.beta)),
            b.numeric_min > b.analytic_floor,
            format!("min {} at ({}, {}) vs floor {}", num(b.numeric_min), num(b.argmin[0]), num(b.argmin[1]), num(b.analytic_floor)),
        ));
        v.push(Verdict::new(
            format!("two_route_beta_{}", num(b.beta)),
            b.disagreements() == 0,
            format!("{} of {} points outside tolerance, worst diff/tolerance {}", b.disagreements(), b.points.len(), num(b.worst_ratio())),
        ));
    }
    v.push(certified_sums_verdict(&r.sweeps));
    // Sweep spreads measure unknown constants; sums-check gates on them.
    v.extend(sweep_verdicts(&r.sweeps, cfg).into_iter().map(Verdict::informational));
    v
}

pub fn sums_verdicts(r: &SumsResults, cfg: &RunConfig) -> Vec<Verdict> {
    let mut v = vec![certified_sums_verdict(&r.sweeps)];
    v.extend(sweep_verdicts(&r.sweeps, cfg));
    v
}

fn sweep_tables(sweeps: &[SweepTable]) -> Vec<(&'static str, Table)> {
    let mut rows = Table::new(&["sweep", "k", "l", "value", "tail_bound", "estimate", "ratio"]);
    let mut summary = Table::new(&["sweep", "min", "max", "spread", "first_decile_max", "last_decile_max"]);
    for t in sweeps {
        for r in &t.rows {
            rows.push(vec![t.name.clone(), mode(r.k), num(r.l), num(r.value), num(r.tail_bound), num(r.estimate), num(r.ratio)]);
        }
        let s = &t.summary;
        summary.push(vec![t.name.clone(), num(s.min), num(s.max), num(s.spread), num(s.first_decile_max), num(s.last_decile_max)]);
    }
    vec![("sweeps.csv", rows), ("sweep_summary.csv", summary)]
}

pub fn kernel_tables(r: &KernelResults) -> Vec<(&'static str, Table)> {
    let mut routes = Table::new(&[
        "beta", "x1", "x2", "heat", "heat_err", "fourier", "fourier_tail", "fourier_imag", "diff", "tolerance", "agrees",
    ]);
    let mut floor = Table::new(&["beta", "numeric_min", "argmin_x1", "argmin_x2", "analytic_floor"]);
    for b in &r.betas {
        for p in &b.points {
            routes.push(vec![
                num(b.beta),
                num(p.x[0]),
                num(p.x[1]),
                num(p.heat),
                num(p.heat_err),
                num(p.fourier.value),
                num(p.fourier.tail_bound),
                num(p.fourier_imag),
                num(p.diff()),
                num(p.tolerance()),
                p.agrees().to_string(),
            ]);
        }
        floor.push(vec![num(b.beta), num(b.numeric_min), num(b.argmin[0]), num(b.argmin[1]), num(b.analytic_floor)]);
    }
    let mut t = vec![("kernel_two_route.csv", routes), ("kernel_floor.csv", floor)];
    t.extend(sweep_tables(&r.sweeps));
    t
}

pub fn sums_tables(r: &SumsResults) -> Vec<(&'static str, Table)> {
    sweep_tables(&r.sweeps)
}
