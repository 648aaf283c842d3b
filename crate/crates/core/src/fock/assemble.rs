use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{BlockOperator, FockBasis};
use crate::freegas::Region;
use crate::lattice::{Interaction, Mode, ModeSet};
use crate::{Error, Result, C64};

/// Ordered pairs (r, s) of mode indices grouped by total momentum.
fn channels(modes: &ModeSet) -> Vec<Vec<Vec<(usize, usize)>>> {
    let k = modes.len();
    let mut by_total: HashMap<Mode, Vec<(usize, usize)>> = HashMap::new();
    for r in 0..k {
        for s in 0..k {
            by_total.entry(modes.mode(r) + modes.mode(s)).or_default().push((r, s));
        }
    }
    (0..k)
        .map(|p| (0..k).map(|q| by_total[&(modes.mode(p) + modes.mode(q))].clone()).collect())
        .collect()
}

/// Σ_{p,q} Σ_{r+s=p+q} coeff(p,q,r,s) a*_r a*_s a_q a_p, assembled sector by sector.
fn assemble_quartic(
    basis: &Arc<FockBasis>,
    coeff: impl Fn(usize, usize, usize, usize) -> f64 + Sync,
) -> BlockOperator {
    let k = basis.n_modes();
    let chan = channels(basis.modes());
    let blocks: Vec<DMatrix<C64>> = basis
        .sectors()
        .par_iter()
        .map(|sec| {
            let mut m = DMatrix::<C64>::zeros(sec.len, sec.len);
            let mut occ = vec![0u16; k];
            for j in 0..sec.len {
                occ.copy_from_slice(basis.occupation(sec.start + j));
                for p in 0..k {
                    if occ[p] == 0 {
                        continue;
                    }
                    let ap = (occ[p] as f64).sqrt();
                    occ[p] -= 1;
                    for q in 0..k {
                        if occ[q] == 0 {
                            continue;
                        }
                        let aq = ap * (occ[q] as f64).sqrt();
                        occ[q] -= 1;
                        for &(r, s) in &chan[p][q] {
                            let c = coeff(p, q, r, s);
                            if c == 0.0 {
                                continue;
                            }
                            occ[s] += 1;
                            let a_s = (occ[s] as f64).sqrt();
                            occ[r] += 1;
                            let a_r = (occ[r] as f64).sqrt();
                            let tgt = basis.index_of(&occ).expect("quartic terms conserve n and momentum");
                            m[(tgt - sec.start, j)] += C64::new(c * aq * a_s * a_r, 0.0);
                            occ[r] -= 1;
                            occ[s] -= 1;
                        }
                        occ[q] += 1;
                    }
                    occ[p] += 1;
                }
            }
            m
        })
        .collect();
    BlockOperator::from_parts(basis, blocks, BTreeMap::new())
}

/// Number operator over the modes selected by `mask`.
pub fn build_number_mask(basis: &Arc<FockBasis>, mask: &[bool]) -> BlockOperator {
    BlockOperator::from_diagonal(basis, |i| {
        basis.occupation(i).iter().zip(mask).filter(|(_, &m)| m).map(|(&c, _)| c as f64).sum()
    })
}

/// 𝒩 restricted to a spectral region.
pub fn build_number(basis: &Arc<FockBasis>, region: Region) -> BlockOperator {
    let mask: Vec<bool> = basis.modes().iter().map(|p| region.contains(p)).collect();
    build_number_mask(basis, &mask)
}

/// dΓ(h), diagonal with entries Σ h(p) n_p.
pub fn build_kinetic(basis: &Arc<FockBasis>) -> BlockOperator {
    let h = basis.modes().energies();
    BlockOperator::from_diagonal(basis, |i| basis.occupation(i).iter().zip(&h).map(|(&c, e)| c as f64 * e).sum())
}

/// λ²/(2(2π)²) Σ_k v̂(k) Σ_{p,q} a*_{p+k} a*_{q-k} a_q a_p with all momenta in the set.
pub fn build_quartic(basis: &Arc<FockBasis>, interaction: Interaction, lambda: f64) -> BlockOperator {
    let mask = vec![true; basis.n_modes()];
    build_quartic_masked(basis, interaction, lambda, &mask, true)
}

/// The quartic form restricted to momenta selected by `mask`, optionally without k = 0.
pub fn build_quartic_masked(
    basis: &Arc<FockBasis>,
    interaction: Interaction,
    lambda: f64,
    mask: &[bool],
    include_k0: bool,
) -> BlockOperator {
    let c = interaction.prefactor(lambda);
    let modes = basis.modes();
    assemble_quartic(basis, |p, q, r, s| {
        if !(mask[p] && mask[q] && mask[r] && mask[s]) || (!include_k0 && r == p) {
            return 0.0;
        }
        c * interaction.coeff(modes.mode(r) - modes.mode(p))
    })
}

/// W_P^re with P selected by `mask`: the k ≠ 0 quartic on P plus λ²/(2(2π)²)(𝒩_P − n0p)².
pub fn build_wre_masked(
    basis: &Arc<FockBasis>,
    interaction: Interaction,
    lambda: f64,
    n0p: f64,
    mask: &[bool],
) -> BlockOperator {
    let c = interaction.prefactor(lambda);
    let quartic = build_quartic_masked(basis, interaction, lambda, mask, false);
    let square = BlockOperator::from_diagonal(basis, |i| {
        let n: f64 = basis.occupation(i).iter().zip(mask).filter(|(_, &m)| m).map(|(&c, _)| c as f64).sum();
        c * (n - n0p).powi(2)
    });
    quartic.add(&square).expect("same basis")
}

/// Renormalized interaction over the whole mode set of the basis.
pub fn build_wre(basis: &Arc<FockBasis>, interaction: Interaction, lambda: f64, n0p: f64) -> BlockOperator {
    build_wre_masked(basis, interaction, lambda, n0p, &vec![true; basis.n_modes()])
}

/// λ dΓ(h) + W_P^re.
pub fn build_full_hamiltonian(basis: &Arc<FockBasis>, interaction: Interaction, lambda: f64, n0p: f64) -> BlockOperator {
    build_kinetic(basis).scale(lambda).add(&build_wre(basis, interaction, lambda, n0p)).expect("same basis")
}

/// M_{p,q,k} = a*_{p+k} a*_{q-k} a_q a_p.
pub fn ladder_monomial(basis: &Arc<FockBasis>, p: Mode, q: Mode, k: Mode) -> Result<BlockOperator> {
    let modes = basis.modes();
    let idx = |m: Mode| modes.position(m).ok_or(Error::ModeOutside(m.0, m.1));
    let (ip, iq, ir, is) = (idx(p)?, idx(q)?, idx(p + k)?, idx(q - k)?);
    Ok(assemble_quartic(basis, |a, b, c, d| if (a, b, c, d) == (ip, iq, ir, is) { 1.0 } else { 0.0 }))
}

/// −λ²/(2(2π)²) Σ_{k≠0} v̂(k) Σ_{p,q} Δ² M_{p,q,k}, with Δ the change of 𝒩_Q and
/// Q the modes flagged in `q_mask`.
pub fn build_double_commutator_formula(
    basis: &Arc<FockBasis>,
    interaction: Interaction,
    lambda: f64,
    q_mask: &[bool],
) -> BlockOperator {
    let c = interaction.prefactor(lambda);
    let modes = basis.modes();
    let qi = |i: usize| q_mask[i] as i32;
    assemble_quartic(basis, |p, q, r, s| {
        if r == p {
            return 0.0;
        }
        let delta = qi(r) + qi(s) - qi(q) - qi(p);
        -c * interaction.coeff(modes.mode(r) - modes.mode(p)) * (delta * delta) as f64
    })
}

/// dΓ(A) = Σ_{r,s} A_{rs} a*_r a_s for a one-body matrix in the mode basis.
pub fn build_one_body(basis: &Arc<FockBasis>, a: &DMatrix<C64>) -> Result<BlockOperator> {
    let k = basis.n_modes();
    if a.nrows() != k || a.ncols() != k {
        return Err(Error::Shape(format!("one-body matrix must be {k}x{k}")));
    }
    let mut diag: Vec<DMatrix<C64>> = basis.sectors().iter().map(|s| DMatrix::zeros(s.len, s.len)).collect();
    let mut off: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
    let mut occ = vec![0u16; k];
    for src in 0..basis.dim() {
        let (ss, sl) = (basis.sector_of(src), basis.local_index(src));
        occ.copy_from_slice(basis.occupation(src));
        for s in 0..k {
            if occ[s] == 0 {
                continue;
            }
            let amp_s = (occ[s] as f64).sqrt();
            occ[s] -= 1;
            for r in 0..k {
                let z = a[(r, s)];
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                occ[r] += 1;
                let amp = amp_s * (occ[r] as f64).sqrt();
                let tgt = basis.index_of(&occ).expect("one-body terms conserve n");
                occ[r] -= 1;
                let (ts, tl) = (basis.sector_of(tgt), basis.local_index(tgt));
                let val = z * amp;
                if ts == ss {
                    diag[ss][(tl, sl)] += val;
                } else {
                    let (rows, cols) = (basis.sector(ts).len, basis.sector(ss).len);
                    off.entry((ts, ss)).or_insert_with(|| DMatrix::zeros(rows, cols))[(tl, sl)] += val;
                }
            }
            occ[s] += 1;
        }
    }
    Ok(BlockOperator::from_parts(basis, diag, off))
}

/// Matrix of e_{k,P} in the mode basis: ⟨e_r, e_k e_s⟩ = (2π)^{-1} δ_{r, s+k}.
pub fn shift_matrix(modes: &ModeSet, k: Mode) -> DMatrix<C64> {
    let n = modes.len();
    let w = 1.0 / (2.0 * std::f64::consts::PI);
    DMatrix::from_fn(n, n, |r, s| if modes.mode(r) == modes.mode(s) + k { C64::new(w, 0.0) } else { C64::new(0.0, 0.0) })
}

/// ρ_k = dΓ(e_{k,P}), which raises total momentum by k.
pub fn build_rho(basis: &Arc<FockBasis>, k: Mode) -> BlockOperator {
    build_one_body(basis, &shift_matrix(basis.modes(), k)).expect("square shift matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, commutator, double_commutator};
    use crate::lattice::{mode_set, KernelParams};
    use crate::{pair_prefactor, TORUS_AREA};

    fn bessel() -> Interaction {
        Interaction::Bessel(KernelParams::new(2.0).unwrap())
    }

    #[test]
    fn single_mode_quartic_is_pair_count() {
        let b = build_basis(&mode_set(1.0), 6).unwrap();
        let w = build_quartic(&b, bessel(), 0.7);
        let c = pair_prefactor(0.7);
        for i in 0..b.dim() {
            let n = b.total(i) as f64;
            assert!((w.entry(i, i).re - c * n * (n - 1.0)).abs() < 1e-14);
        }
        let wre = build_wre(&b, bessel(), 0.7, 1.3);
        for i in 0..b.dim() {
            let n = b.total(i) as f64;
            assert!((wre.entry(i, i).re - c * (n - 1.3).powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn kinetic_entries() {
        let modes = mode_set(2.0);
        let b = build_basis(&modes, 3).unwrap();
        let t = build_kinetic(&b);
        assert_eq!(t.entry(0, 0).re, 0.0);
        let mut occ = vec![0u16; 5];
        occ[modes.position(Mode(1, 0)).unwrap()] = 1;
        occ[modes.position(Mode(0, 1)).unwrap()] = 2;
        let i = b.index_of(&occ).unwrap();
        assert_eq!(t.entry(i, i).re, 6.0);
    }

    #[test]
    fn quartic_is_hermitian_and_kills_vacuum() {
        let b = build_basis(&mode_set(2.0), 3).unwrap();
        let w = build_quartic(&b, bessel(), 1.0);
        assert!(w.hermiticity_residual() <= 1e-12);
        assert_eq!(w.entry(0, 0).norm(), 0.0);
        assert!(w.is_conserving());
    }

    #[test]
    fn renormalization_bookkeeping() {
        let b = build_basis(&mode_set(2.0), 4).unwrap();
        let (lam, n0) = (0.8, 2.3);
        let c = pair_prefactor(lam);
        let direct = build_wre(&b, bessel(), lam, n0);
        let number = build_number(&b, Region::All);
        let via = build_quartic(&b, bessel(), lam)
            .add(&number.scale(c * (1.0 - 2.0 * n0)))
            .unwrap()
            .add_identity(c * n0 * n0);
        assert!(direct.max_abs_diff(&via).unwrap() <= 1e-12);
    }

    #[test]
    fn vacuum_entry_of_hamiltonian() {
        let b = build_basis(&mode_set(2.0), 2).unwrap();
        let h = build_full_hamiltonian(&b, bessel(), 0.5, 3.0);
        assert!((h.entry(0, 0).re - pair_prefactor(0.5) * 9.0).abs() < 1e-15);
        assert_eq!(b.sector(0).len, 1);
        assert!(h.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn monomial_matrix_elements() {
        let modes = mode_set(2.0);
        let b = build_basis(&modes, 3).unwrap();
        let m0 = ladder_monomial(&b, Mode::ZERO, Mode::ZERO, Mode::ZERO).unwrap();
        let zero = modes.position(Mode::ZERO).unwrap();
        for i in 0..b.dim() {
            let n = b.occupation(i)[zero] as f64;
            assert!((m0.entry(i, i).re - n * (n - 1.0)).abs() < 1e-14);
        }
        let mut occ = vec![0u16; 5];
        occ[modes.position(Mode(1, 0)).unwrap()] = 1;
        occ[modes.position(Mode(-1, 0)).unwrap()] = 1;
        let i = b.index_of(&occ).unwrap();
        let m = ladder_monomial(&b, Mode(1, 0), Mode(-1, 0), Mode::ZERO).unwrap();
        assert_eq!(m.entry(i, i).re, 1.0);
        let (p, q, k) = (Mode(1, 0), Mode(0, 1), Mode(-1, 1));
        let a = ladder_monomial(&b, p, q, k).unwrap();
        let adj = ladder_monomial(&b, p + k, q - k, -k).unwrap();
        assert!(a.adjoint().max_abs_diff(&adj).unwrap() == 0.0);
        assert!(ladder_monomial(&b, Mode(1, 0), Mode(1, 0), Mode(1, 0)).is_err());
    }

    #[test]
    fn number_commutes_with_hamiltonian() {
        let b = build_basis(&mode_set(2.0), 3).unwrap();
        let h = build_full_hamiltonian(&b, bessel(), 1.0, 1.0);
        let n = build_number(&b, Region::All);
        assert!(commutator(&n, &h).unwrap().max_abs() <= 1e-12);
        let nq = build_number(&b, Region::Above(2.0));
        assert_eq!(nq.max_abs(), 0.0);
        assert_eq!(double_commutator(&nq, &h).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn ccr_rewiring() {
        let modes = mode_set(2.0);
        let b = build_basis(&modes, 3).unwrap();
        for k in modes.nonzero_differences().into_iter().chain([Mode::ZERO]) {
            let mut lhs = BlockOperator::zeros(&b);
            for p in modes.iter() {
                for q in modes.iter() {
                    if let Ok(m) = ladder_monomial(&b, p, q, k) {
                        lhs = lhs.add(&m).unwrap();
                    }
                }
            }
            let rr = build_rho(&b, k).mul(&build_rho(&b, -k)).unwrap();
            // On a truncated set the contraction term only counts modes p with p - k inside.
            let ek = shift_matrix(&modes, k);
            let contraction = build_one_body(&b, &(&ek * shift_matrix(&modes, -k))).unwrap();
            let rhs = rr.sub(&contraction).unwrap().scale(TORUS_AREA);
            assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12, "k = {k}");
        }
    }

    #[test]
    fn double_commutator_block_formula() {
        let modes = mode_set(3.0);
        let b = build_basis(&modes, 3).unwrap();
        let q_mask: Vec<bool> = modes.below_mask(1.5).into_iter().map(|x| !x).collect();
        let h = build_full_hamiltonian(&b, bessel(), 1.0, 0.5);
        let nq = build_number_mask(&b, &q_mask);
        let direct = double_commutator(&nq, &h).unwrap();
        let formula = build_double_commutator_formula(&b, bessel(), 1.0, &q_mask);
        assert!(direct.max_abs() > 1e-3);
        assert!(direct.max_abs_diff(&formula).unwrap() <= 1e-12);
    }

    #[test]
    fn wre_is_nonnegative_on_random_vectors() {
        use rand_chacha::rand_core::{Rng, SeedableRng};
        let b = build_basis(&mode_set(3.0), 3).unwrap();
        let w = build_wre(&b, bessel(), 1.0, 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (s, blk) in w.blocks().iter().enumerate() {
            let n = b.sector(s).len;
            let v = nalgebra::DVector::<C64>::from_fn(n, |_, _| {
                let u = |r: &mut rand_chacha::ChaCha8Rng| (r.next_u64() as f64 / u64::MAX as f64) - 0.5;
                C64::new(u(&mut rng), u(&mut rng))
            });
            let e = (v.adjoint() * blk * &v)[(0, 0)];
            assert!(e.re >= -1e-12 && e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn off_interaction_vanishes() {
        let b = build_basis(&mode_set(2.0), 2).unwrap();
        assert_eq!(build_wre(&b, Interaction::Off, 1.0, 0.7).max_abs(), 0.0);
    }
}
