//! Exact operator identities on the truncated Fock space.

use bosefield::bridge::definetti_matrices;
use bosefield::fock::{
    build_basis, build_double_commutator_formula, build_full_hamiltonian, build_number, build_number_mask,
    build_one_body, build_quartic, build_rho, build_wre, double_commutator, ladder_monomial, shift_matrix,
    BlockOperator,
};
use bosefield::freegas::{mode_number, Region};
use bosefield::gibbs::{gibbs, hf_masks, wick_check};
use bosefield::{dispersion, mode_set, pair_prefactor, Mode, C64, TORUS_AREA};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::output::{num, Table};
use crate::{CliError, RunConfig, Verdict};

pub const IDENTITY_NAMES: [&str; 6] =
    ["ccr", "renormalization", "double_commutator", "wick", "definetti_norm", "definetti_norm_sq"];

/// Size of the perturbation applied by fault injection.
const FAULT: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Size of the quantities being compared, to show the check is not vacuous.
    pub scale: f64,
}

impl IdentityResult {
    pub fn passes(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentitiesResults {
    pub dim: usize,
    pub results: Vec<IdentityResult>,
}

fn corrupt(op: BlockOperator, name: &str, cfg: &RunConfig) -> BlockOperator {
    if cfg.inject_fault.as_deref() == Some(name) {
        op.add_identity(FAULT)
    } else {
        op
    }
}

fn corrupt_scalar(x: f64, name: &str, cfg: &RunConfig) -> f64 {
    if cfg.inject_fault.as_deref() == Some(name) {
        x + FAULT
    } else {
        x
    }
}

pub fn identities(cfg: &RunConfig) -> Result<IdentitiesResults, CliError> {
    let id = &cfg.identities;
    let modes = mode_set(cfg.cutoff_sq);
    let inter = cfg.interaction();
    let tol = cfg.tolerances.identity;
    // A fixed top-level cap overrides the suite's own.
    let basis = build_basis(&modes, cfg.cap.fixed().unwrap_or(id.cap))?;
    let lam = id.lambda;
    let mut out = Vec::new();

    // Σ_{p,q} a*_{p+k} a*_{q-k} a_q a_p = (2π)²(ρ_k ρ_{-k} − dΓ(e_k e_{-k})).
    let mut ccr = 0.0f64;
    let mut scale = 0.0f64;
    for k in modes.nonzero_differences().into_iter().chain([Mode::ZERO]) {
        let mut lhs = BlockOperator::zeros(&basis);
        for p in modes.iter() {
            for q in modes.iter() {
                if let Ok(m) = ladder_monomial(&basis, p, q, k) {
                    lhs = lhs.add(&m)?;
                }
            }
        }
        let lhs = corrupt(lhs, "ccr", cfg);
        let contraction = build_one_body(&basis, &(shift_matrix(&modes, k) * shift_matrix(&modes, -k)))?;
        let rhs = build_rho(&basis, k).mul(&build_rho(&basis, -k))?.sub(&contraction)?.scale(TORUS_AREA);
        ccr = ccr.max(lhs.max_abs_diff(&rhs)?);
        scale = scale.max(rhs.max_abs());
    }
    out.push(IdentityResult { name: "ccr".into(), residual: ccr, tolerance: tol, scale });

    // W^re = W + c(1 − 2N₀)𝒩 + cN₀².
    let n0 = mode_number(lam, modes.iter());
    let c = pair_prefactor(lam);
    let direct = corrupt(build_wre(&basis, inter, lam, n0), "renormalization", cfg);
    let via = build_quartic(&basis, inter, lam)
        .add(&build_number(&basis, Region::All).scale(c * (1.0 - 2.0 * n0)))?
        .add_identity(c * n0 * n0);
    out.push(IdentityResult {
        name: "renormalization".into(),
        residual: direct.max_abs_diff(&via)?,
        tolerance: tol,
        scale: via.max_abs(),
    });

    let (_, q_mask) = hf_masks(&modes, cfg.inner_cutoff_sq);
    let h = build_full_hamiltonian(&basis, inter, lam, n0);
    let direct = corrupt(double_commutator(&build_number_mask(&basis, &q_mask), &h)?, "double_commutator", cfg);
    let formula = build_double_commutator_formula(&basis, inter, lam, &q_mask);
    out.push(IdentityResult {
        name: "double_commutator".into(),
        residual: direct.max_abs_diff(&formula)?,
        tolerance: tol,
        scale: formula.max_abs(),
    });

    // Diagonal source on the highest mode.
    let top = (0..modes.len()).fold(0, |b, i| if dispersion(modes.mode(i)) > dispersion(modes.mode(b)) { i } else { b });
    let mut f = DMatrix::<C64>::zeros(modes.len(), modes.len());
    f[(top, top)] = C64::new(1.0, 0.0);
    for &t in &id.wick_t {
        let w = wick_check(&modes, id.wick_cap, inter, id.wick_lambda, t, &f)?;
        let direct = corrupt_scalar(w.direct, "wick", cfg);
        out.push(IdentityResult {
            name: format!("wick_t_{}", num(t)),
            residual: (direct - w.wick).abs(),
            tolerance: w.tolerance,
            scale: w.wick.abs(),
        });
    }

    let state = gibbs(&h)?;
    let m = definetti_matrices(&state, lam)?;
    let k = modes.len() as f64;
    let n1 = state.diagonal_expectation(|o| o.iter().map(|&x| x as f64).sum());
    let nn = state.diagonal_expectation(|o| {
        let n: f64 = o.iter().map(|&x| x as f64).sum();
        n * (n - 1.0)
    });
    let want_a = lam * n1 + lam * k;
    let got_a = corrupt_scalar(m.m1.trace().re, "definetti_norm", cfg);
    out.push(IdentityResult { name: "definetti_norm".into(), residual: (got_a - want_a).abs(), tolerance: tol, scale: want_a });
    let want_b = lam * lam * (nn + 2.0 * (k + 1.0) * n1 + k * (k + 1.0));
    let got_b = corrupt_scalar(m.m2.trace().re, "definetti_norm_sq", cfg);
    out.push(IdentityResult { name: "definetti_norm_sq".into(), residual: (got_b - want_b).abs(), tolerance: tol, scale: want_b });

    Ok(IdentitiesResults { dim: basis.dim(), results: out })
}

pub fn verdicts(r: &IdentitiesResults) -> Vec<Verdict> {
    r.results
        .iter()
        .map(|x| {
            Verdict::new(
                x.name.clone(),
                x.passes(),
                format!("residual {} (tolerance {}, scale {})", num(x.residual), num(x.tolerance), num(x.scale)),
            )
        })
        .collect()
}

pub fn tables(r: &IdentitiesResults) -> Vec<(&'static str, Table)> {
    let mut t = Table::new(&["identity", "residual", "tolerance", "scale", "pass"]);
    for x in &r.results {
        t.push(vec![x.name.clone(), num(x.residual), num(x.tolerance), num(x.scale), x.passes().to_string()]);
    }
    vec![("identities.csv", t)]
}
