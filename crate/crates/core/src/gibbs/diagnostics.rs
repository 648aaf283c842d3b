use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{expectation, gibbs, reduced_density, two_body_sym, GibbsState};
use crate::fock::{build_basis_with_limit, build_full_hamiltonian, build_quartic_masked, shift_matrix, DEFAULT_BASIS_LIMIT};
use crate::freegas::{capped_free_partition, mode_number, quasi_free_cap_defect, sector_partitions, CapAnalysis};
use crate::lattice::{Interaction, ModeSet};
use crate::{Error, Result, C64, TORUS_AREA};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FreeEnergyOptions {
    /// Lower bound on the real-space kernel used by the coercive cap bound.
    pub vstar: f64,
    /// Largest admissible relative cap defect.
    pub threshold: f64,
    pub basis_limit: usize,
}

impl Default for FreeEnergyOptions {
    fn default() -> Self {
        FreeEnergyOptions { vstar: 0.0, threshold: 1e-8, basis_limit: DEFAULT_BASIS_LIMIT }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FreeEnergy {
    pub lambda: f64,
    pub cap: usize,
    /// −(log Z^re − log Z^free) on the shared capped space.
    pub f: f64,
    pub log_z_re: f64,
    pub log_z_free: f64,
    pub n0p: f64,
    pub relative_defect: f64,
}

/// Relative free energy from an already computed Gibbs state of λdΓ(h) + W_P^re.
pub fn free_energy_of(state: &GibbsState, lambda: f64, relative_defect: f64) -> FreeEnergy {
    let basis = state.basis();
    let log_z_free = capped_free_partition(basis.modes(), basis.cap(), lambda).ln();
    FreeEnergy {
        lambda,
        cap: basis.cap(),
        f: -(state.log_z() - log_z_free),
        log_z_re: state.log_z(),
        log_z_free,
        n0p: mode_number(lambda, basis.modes().iter()),
        relative_defect,
    }
}

/// Builds and diagonalizes the interacting Hamiltonian, after checking that
/// `cap` is certified, and returns the Gibbs state with its free energy.
pub fn free_energy_diff(
    modes: &ModeSet,
    cap: usize,
    interaction: Interaction,
    lambda: f64,
    opts: &FreeEnergyOptions,
) -> Result<(FreeEnergy, GibbsState)> {
    let n0p = mode_number(lambda, modes.iter());
    let cert = CapAnalysis::new(modes, lambda, interaction, opts.vstar, n0p)?.certificate(cap);
    if !(cert.relative < opts.threshold) {
        return Err(Error::CapTooSmall { cap, relative: cert.relative, threshold: opts.threshold });
    }
    let basis = build_basis_with_limit(modes, cap, opts.basis_limit)?;
    let h = build_full_hamiltonian(&basis, interaction, lambda, n0p);
    let state = gibbs(&h)?;
    drop(h);
    Ok((free_energy_of(&state, lambda, cert.relative), state))
}

fn region_count(occ: &[u16], mask: &[bool]) -> f64 {
    occ.iter().zip(mask).filter(|(_, &m)| m).map(|(&c, _)| c as f64).sum()
}

/// λ²⟨(𝒩_mask − center)²⟩.
pub fn fluctuation(state: &GibbsState, lambda: f64, mask: &[bool], center: f64) -> f64 {
    lambda * lambda * state.diagonal_expectation(|o| (region_count(o, mask) - center).powi(2))
}

/// Masks of P (h ≤ inner) and Q (the remaining modes of the basis).
pub fn hf_masks(modes: &ModeSet, inner_cutoff_sq: f64) -> (Vec<bool>, Vec<bool>) {
    let p = modes.below_mask(inner_cutoff_sq);
    let q = p.iter().map(|x| !x).collect();
    (p, q)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HfRecord {
    pub hf0: f64,
    /// c⟨2(𝒩_P − N_{0,P})(𝒩_Q − N_{0,Q})⟩
    pub cross: f64,
    /// c⟨(𝒩_Q − N_{0,Q})²⟩
    pub square: f64,
    pub hf_neq0: f64,
}

/// Zero-mode and nonzero-mode localization errors at the inner cutoff.
pub fn hf_diagnostics(state: &GibbsState, interaction: Interaction, lambda: f64, inner_cutoff_sq: f64) -> Result<HfRecord> {
    let modes = state.basis().modes();
    if inner_cutoff_sq < 1.0 {
        return Err(Error::InvalidParam(format!("inner cutoff {inner_cutoff_sq} must be at least 1")));
    }
    let (pm, qm) = hf_masks(modes, inner_cutoff_sq);
    let c = interaction.prefactor(lambda);
    let sel = |m: &[bool]| modes.iter().zip(m.to_vec()).filter(|(_, b)| *b).map(|(p, _)| p).collect::<Vec<_>>();
    let n0p = mode_number(lambda, sel(&pm));
    let n0q = mode_number(lambda, sel(&qm));
    let cross = c * state.diagonal_expectation(|o| 2.0 * (region_count(o, &pm) - n0p) * (region_count(o, &qm) - n0q));
    let square = c * state.diagonal_expectation(|o| (region_count(o, &qm) - n0q).powi(2));
    let g2 = reduced_density(state, 2)?;
    let kernel = |r: usize, s: usize, p: usize, q: usize, restrict: bool| {
        let (mr, ms, mp, mq) = (modes.mode(r), modes.mode(s), modes.mode(p), modes.mode(q));
        if mr + ms != mp + mq || r == p || (restrict && !(pm[r] && pm[s] && pm[p] && pm[q])) {
            return C64::new(0.0, 0.0);
        }
        C64::new(interaction.coeff(mr - mp) / TORUS_AREA, 0.0)
    };
    let v_full = two_body_sym(modes, |r, s, p, q| kernel(r, s, p, q, false));
    let v_p = two_body_sym(modes, |r, s, p, q| kernel(r, s, p, q, true));
    let hf_neq0 = lambda * lambda * ((v_full - v_p) * &g2.matrix).trace().re;
    Ok(HfRecord { hf0: cross + square, cross, square, hf_neq0 })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProductTrialHf {
    pub hf0: f64,
    pub cross: f64,
    pub square: f64,
    pub cap_p: usize,
    pub cap_q: usize,
    pub relative_defect_p: f64,
    pub defect_q: f64,
}

/// HF₀ of the product state Γ_P ⊗ Γ_{0,Q}: the interacting Gibbs state on the
/// modes with h ≤ inner times the capped free state on the remaining modes. Both
/// factors are diagonal in the number of particles of their region, so the
/// expectation is a double sum over the two number distributions.
pub fn product_trial_hf0(
    modes: &ModeSet,
    inner_cutoff_sq: f64,
    interaction: Interaction,
    lambda: f64,
    opts: &FreeEnergyOptions,
    q_defect_target: f64,
) -> Result<ProductTrialHf> {
    let (pm, qm) = hf_masks(modes, inner_cutoff_sq);
    let pick = |m: &[bool]| -> Vec<_> { modes.iter().zip(m.iter()).filter(|(_, &b)| b).map(|(p, _)| p).collect() };
    let (p_modes, q_modes) = (pick(&pm), pick(&qm));
    let p_set = ModeSet::from_modes(inner_cutoff_sq, p_modes.clone());
    let n0p = mode_number(lambda, p_modes.iter().copied());
    let n0q = mode_number(lambda, q_modes.iter().copied());
    let cert = CapAnalysis::new(&p_set, lambda, interaction, opts.vstar, n0p)?.smallest_cap(opts.threshold, 4096)?;
    let basis = build_basis_with_limit(&p_set, cert.cap, opts.basis_limit)?;
    let state = gibbs(&build_full_hamiltonian(&basis, interaction, lambda, n0p))?;
    let mut dist_p = vec![0.0; cert.cap + 1];
    for (i, pr) in state.diagonal_probabilities().into_iter().enumerate() {
        dist_p[basis.total(i)] += pr;
    }
    let eq: Vec<f64> = q_modes.iter().map(|&p| lambda * crate::lattice::dispersion(p)).collect();
    let mut cap_q = 1usize;
    while quasi_free_cap_defect(&eq, cap_q) >= q_defect_target {
        cap_q *= 2;
        if cap_q > 1 << 16 {
            return Err(Error::CapSearchFailed { max_cap: cap_q, threshold: q_defect_target });
        }
    }
    let zq = sector_partitions(&eq, cap_q);
    let zq_total: f64 = zq.iter().sum();
    let c = interaction.prefactor(lambda);
    let (mut cross, mut square) = (0.0, 0.0);
    for (n, &wp) in dist_p.iter().enumerate() {
        for (m, &zm) in zq.iter().enumerate() {
            let w = wp * zm / zq_total;
            let (dp, dq) = (n as f64 - n0p, m as f64 - n0q);
            cross += w * 2.0 * c * dp * dq;
            square += w * c * dq * dq;
        }
    }
    Ok(ProductTrialHf {
        hf0: cross + square,
        cross,
        square,
        cap_p: cert.cap,
        cap_q,
        relative_defect_p: cert.relative,
        defect_q: quasi_free_cap_defect(&eq, cap_q),
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WickRecord {
    pub direct: f64,
    pub wick: f64,
    /// λ²/2 Σ_{k≠0} v̂(k)|Tr(γM_k)|², the part that vanishes for translation-invariant γ.
    pub direct_term: f64,
    pub defect: f64,
    pub tolerance: f64,
}

impl WickRecord {
    pub fn passes(&self) -> bool {
        (self.direct - self.wick).abs() <= self.tolerance
    }
}

/// Compares ⟨W_{≠0}⟩ in the capped quasi-free state e^{−λdΓ(h − t f/2)} with
/// the Wick formula evaluated on the untruncated one-body density matrix.
/// `f` must be diagonal in the mode basis so that the state stays sector-diagonal.
pub fn wick_check(
    modes: &ModeSet,
    cap: usize,
    interaction: Interaction,
    lambda: f64,
    t: f64,
    f: &DMatrix<C64>,
) -> Result<WickRecord> {
    let k = modes.len();
    if t.abs() > 1.0 {
        return Err(Error::InvalidParam(format!("|t| = {} exceeds 1", t.abs())));
    }
    if f.nrows() != k || f.ncols() != k {
        return Err(Error::Shape(format!("source must be {k}x{k}")));
    }
    if (0..k).any(|i| (0..k).any(|j| i != j && f[(i, j)].norm() > 0.0)) || (0..k).any(|i| f[(i, i)].im != 0.0) {
        return Err(Error::InvalidParam("wick_check needs a real diagonal source".into()));
    }
    let eps: Vec<f64> = (0..k).map(|i| lambda * (crate::lattice::dispersion(modes.mode(i)) - 0.5 * t * f[(i, i)].re)).collect();
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParam("source makes a one-body energy non-positive".into()));
    }
    let defect = quasi_free_cap_defect(&eps, cap);
    let basis = build_basis_with_limit(modes, cap, DEFAULT_BASIS_LIMIT)?;
    let h = crate::fock::BlockOperator::from_diagonal(&basis, |i| {
        basis.occupation(i).iter().zip(&eps).map(|(&n, e)| n as f64 * e).sum()
    });
    let state = gibbs(&h)?;
    let all = vec![true; k];
    let direct = expectation(&state, &build_quartic_masked(&basis, interaction, lambda, &all, false))?.re;
    let gamma = DMatrix::from_fn(k, k, |i, j| if i == j { C64::new(1.0 / eps[i].exp_m1(), 0.0) } else { C64::new(0.0, 0.0) });
    let (mut wick, mut direct_term) = (0.0, 0.0);
    for q in modes.nonzero_differences() {
        let v = interaction.coeff(q);
        let gm = &gamma * shift_matrix(modes, q);
        let tr = gm.trace().norm_sqr();
        let exch = (&gm * &gamma * shift_matrix(modes, -q)).trace().re;
        direct_term += v * tr;
        wick += v * (tr + exch);
    }
    let half = 0.5 * lambda * lambda;
    let (wick, direct_term) = (half * wick, half * direct_term);
    Ok(WickRecord { direct, wick, direct_term, defect, tolerance: (10.0 * defect * wick.abs().max(1.0)).max(1e-10) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, build_kinetic, build_number_mask, build_wre, build_wre_masked};
    use crate::freegas::mode_cumulants;
    use crate::lattice::{mode_set, KernelParams, Mode};
    use crate::pair_prefactor;

    fn bessel() -> Interaction {
        Interaction::Bessel(KernelParams::new(2.0).unwrap())
    }

    #[test]
    fn free_energy_vanishes_without_interaction() {
        let (fe, _) = free_energy_diff(&mode_set(2.0), 12, Interaction::Off, 3.0, &FreeEnergyOptions::default()).unwrap();
        assert!(fe.f.abs() < 1e-12);
    }

    #[test]
    fn single_mode_scalar_oracle() {
        let modes = mode_set(1.0);
        let (fe, _) = free_energy_diff(&modes, 20, bessel(), 1.0, &FreeEnergyOptions::default()).unwrap();
        let n0 = 1.0 / 1f64.exp_m1();
        let c = pair_prefactor(1.0);
        let zre: f64 = (0..=20).map(|n| (-(n as f64) - c * (n as f64 - n0).powi(2)).exp()).sum();
        let zfree: f64 = (0..=20).map(|n| (-(n as f64)).exp()).sum();
        assert!((fe.f + (zre / zfree).ln()).abs() < 1e-12);
    }

    #[test]
    fn small_cap_is_rejected() {
        let r = free_energy_diff(&mode_set(2.0), 2, bessel(), 0.5, &FreeEnergyOptions::default());
        assert!(matches!(r, Err(Error::CapTooSmall { .. })));
    }

    #[test]
    fn variational_upper_bound() {
        let modes = mode_set(2.0);
        let (fe, _) = free_energy_diff(&modes, 17, bessel(), 1.0, &FreeEnergyOptions::default()).unwrap();
        let b = build_basis(&modes, 17).unwrap();
        let free = gibbs(&build_kinetic(&b)).unwrap();
        let w = expectation(&free, &build_wre(&b, bessel(), 1.0, fe.n0p)).unwrap().re;
        assert!(fe.f <= w);
    }

    #[test]
    fn fluctuation_matches_cumulants() {
        let modes = mode_set(2.0);
        let lam = 2.0;
        let b = build_basis(&modes, 24).unwrap();
        let st = gibbs(&build_kinetic(&b).scale(lam)).unwrap();
        let mask = vec![true; 5];
        let [k1, k2, _, _] = mode_cumulants(lam, modes.iter());
        let center = 0.3;
        let got = fluctuation(&st, lam, &mask, center);
        let want = lam * lam * (k2 + (k1 - center).powi(2));
        assert!((got - want).abs() < 1e-9);
        assert!(fluctuation(&st, lam, &mask, k1) >= 0.0);
    }

    #[test]
    fn hf_localization_identity() {
        let modes = mode_set(2.0);
        let lam = 1.0;
        let b = build_basis(&modes, 8).unwrap();
        let n0 = mode_number(lam, modes.iter());
        let st = gibbs(&build_full_hamiltonian(&b, bessel(), lam, n0)).unwrap();
        let hf = hf_diagnostics(&st, bessel(), lam, 1.5).unwrap();
        let (pm, _) = hf_masks(&modes, 1.5);
        let n0p = mode_number(lam, [Mode::ZERO]);
        let full = expectation(&st, &build_wre(&b, bessel(), lam, n0)).unwrap().re;
        let inner = expectation(&st, &build_wre_masked(&b, bessel(), lam, n0p, &pm)).unwrap().re;
        assert!((full - inner - hf.hf0 - hf.hf_neq0).abs() < 1e-10);
        let all = vec![true; 5];
        let diff = build_quartic_masked(&b, bessel(), lam, &all, false)
            .sub(&build_quartic_masked(&b, bessel(), lam, &pm, false))
            .unwrap();
        assert!((expectation(&st, &diff).unwrap().re - hf.hf_neq0).abs() < 1e-10);
        let none = hf_diagnostics(&st, bessel(), lam, 2.0).unwrap();
        assert_eq!((none.hf0, none.hf_neq0), (0.0, 0.0));
        let _ = build_number_mask;
    }

    #[test]
    fn product_trial_cross_term_vanishes() {
        let opts = FreeEnergyOptions::default();
        let r = product_trial_hf0(&mode_set(2.0), 1.5, bessel(), 1.0, &opts, 1e-15).unwrap();
        assert!(r.cross.abs() <= 1e-10, "{r:?}");
        assert!(r.square > 0.0);
    }

    #[test]
    fn wick_formula() {
        let modes = mode_set(2.0);
        let zero = DMatrix::<C64>::zeros(5, 5);
        let r0 = wick_check(&modes, 20, bessel(), 2.0, 0.0, &zero).unwrap();
        assert_eq!(r0.direct_term, 0.0);
        assert!(r0.passes(), "{r0:?}");
        let mut f = zero.clone();
        f[(modes.position(Mode(1, 0)).unwrap(), modes.position(Mode(1, 0)).unwrap())] = C64::new(1.0, 0.0);
        let r1 = wick_check(&modes, 20, bessel(), 2.0, 0.5, &f).unwrap();
        assert!(r1.passes(), "{r1:?}");
        let one = wick_check(&mode_set(1.0), 10, bessel(), 1.0, 0.5, &DMatrix::zeros(1, 1)).unwrap();
        assert_eq!((one.direct, one.wick), (0.0, 0.0));
    }
}
