use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hs_distance;
use crate::classical::{mc_correlation, mc_partition, CorrelationEstimate, McEstimate, McSpec};
use crate::freegas::{mode_number, CapAnalysis};
use crate::gibbs::{fluctuation, free_energy_diff, hf_diagnostics, reduced_density, FreeEnergyOptions};
use crate::lattice::{analytic_floor, Interaction, ModeSet};
use crate::{Result, C64};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub inner_cutoff_sq: f64,
    /// Fixed cap, or None to certify the smallest cap per λ.
    pub cap: Option<usize>,
    pub max_cap: usize,
    pub free_energy: FreeEnergyOptions,
}

impl ConvergenceOptions {
    pub fn new(interaction: Interaction) -> Self {
        let vstar = match interaction {
            Interaction::Bessel(p) => analytic_floor(p),
            Interaction::Off => 0.0,
        };
        ConvergenceOptions {
            inner_cutoff_sq: 1.5,
            cap: None,
            max_cap: 4096,
            free_energy: FreeEnergyOptions { vstar, ..FreeEnergyOptions::default() },
        }
    }
}

/// The λ-independent classical side of the comparison.
#[derive(Clone, Debug)]
pub struct ClassicalReference {
    pub z: McEstimate,
    pub gamma1: CorrelationEstimate,
    pub gamma2: CorrelationEstimate,
}

impl ClassicalReference {
    pub fn compute(modes: &ModeSet, interaction: Interaction, spec: &McSpec) -> Result<Self> {
        Ok(ClassicalReference {
            z: mc_partition(modes, interaction, spec)?,
            gamma1: mc_correlation(modes, interaction, 1, spec)?,
            gamma2: mc_correlation(modes, interaction, 2, spec)?,
        })
    }

    pub fn neg_log_z(&self) -> f64 {
        -self.z.mean.ln()
    }

    pub fn neg_log_z_stderr(&self) -> f64 {
        self.z.stderr / self.z.mean
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub cap: Option<usize>,
    pub dim: Option<usize>,
    pub relative_defect: Option<f64>,
    pub f: Option<f64>,
    pub neg_log_z: f64,
    pub neg_log_z_stderr: f64,
    /// F_λ − (−log z_P)
    pub gap: Option<f64>,
    pub hs_k1: Option<f64>,
    pub hs_k1_stderr: f64,
    pub hs_k2: Option<f64>,
    pub hs_k2_stderr: f64,
    pub hf0: Option<f64>,
    pub hf_neq0: Option<f64>,
    pub fluct: Option<f64>,
    /// "ok", or the reason the quantum side could not be computed.
    pub status: String,
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn quantum_row(
    modes: &ModeSet,
    interaction: Interaction,
    lambda: f64,
    opts: &ConvergenceOptions,
    classical: &ClassicalReference,
    row: &mut ConvergenceRow,
) -> Result<()> {
    let n0p = mode_number(lambda, modes.iter());
    let cap = match opts.cap {
        Some(c) => c,
        None => {
            CapAnalysis::new(modes, lambda, interaction, opts.free_energy.vstar, n0p)?
                .smallest_cap(opts.free_energy.threshold, opts.max_cap)?
                .cap
        }
    };
    row.cap = Some(cap);
    let (fe, state) = free_energy_diff(modes, cap, interaction, lambda, &opts.free_energy)?;
    row.dim = Some(state.basis().dim());
    row.relative_defect = Some(fe.relative_defect);
    row.f = Some(fe.f);
    row.gap = Some(fe.f - row.neg_log_z);
    let g1 = reduced_density(&state, 1)?.matrix * C64::new(lambda, 0.0);
    let g2 = reduced_density(&state, 2)?.matrix * C64::new(2.0 * lambda * lambda, 0.0);
    row.hs_k1 = Some(hs_distance(&g1, &classical.gamma1.matrix)?);
    row.hs_k2 = Some(hs_distance(&g2, &classical.gamma2.matrix)?);
    let hf = hf_diagnostics(&state, interaction, lambda, opts.inner_cutoff_sq)?;
    row.hf0 = Some(hf.hf0);
    row.hf_neq0 = Some(hf.hf_neq0);
    row.fluct = Some(fluctuation(&state, lambda, &vec![true; modes.len()], n0p));
    Ok(())
}

/// One row per λ comparing k!λ^kΓ^{(k)} and F_λ with the classical reference.
/// A λ whose quantum side cannot be computed (cap certification, basis size)
/// yields a row with the error in `status` and empty quantum fields.
pub fn convergence_report(
    modes: &ModeSet,
    interaction: Interaction,
    lambdas: &[f64],
    opts: &ConvergenceOptions,
    classical: &ClassicalReference,
) -> Vec<ConvergenceRow> {
    lambdas
        .iter()
        .map(|&lambda| {
            let mut row = ConvergenceRow {
                lambda,
                neg_log_z: classical.neg_log_z(),
                neg_log_z_stderr: classical.neg_log_z_stderr(),
                hs_k1_stderr: frobenius(&classical.gamma1.stderr),
                hs_k2_stderr: frobenius(&classical.gamma2.stderr),
                status: "ok".into(),
                ..Default::default()
            };
            if let Err(e) = quantum_row(modes, interaction, lambda, opts, classical, &mut row) {
                row.status = e.to_string();
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{mode_set, KernelParams};

    #[test]
    fn rows_per_lambda_and_infeasible_status() {
        let modes = mode_set(2.0);
        let inter = Interaction::Bessel(KernelParams::new(2.0).unwrap());
        let spec = McSpec { samples: 4096, seed: 1 };
        let cl = ClassicalReference::compute(&modes, inter, &spec).unwrap();
        let mut opts = ConvergenceOptions::new(inter);
        opts.free_energy.basis_limit = 50_000;
        let rows = convergence_report(&modes, inter, &[2.0, 0.1], &opts, &cl);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "ok");
        assert!(rows[0].hs_k1.unwrap() > 0.0 && rows[0].f.is_some());
        assert!(rows[1].f.is_none() && rows[1].status.contains("basis too large"));
        assert_eq!(rows[1].neg_log_z, rows[0].neg_log_z);
    }
}
