use nalgebra::DMatrix;
use rayon::prelude::*;

use super::GibbsState;
use crate::fock::FockBasis;
use crate::lattice::ModeSet;
use crate::{Error, Result, C64};

/// Reduced k-body density matrix in binomial normalization, Tr Γ^{(k)} = ⟨C(𝒩, k)⟩.
///
/// For k = 2 the matrix lives on the symmetric square with orthonormal basis
/// f_ij = (e_i⊗e_j + e_j⊗e_i)/√2 for i < j and f_ii = e_i⊗e_i, ordered as in
/// [`sym_pairs`].
#[derive(Clone, Debug)]
pub struct ReducedDensity {
    pub order: usize,
    pub matrix: DMatrix<C64>,
    pub trace: f64,
}

/// Index pairs (i ≤ j) labelling the symmetric two-body basis.
pub fn sym_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect()
}

/// Isometry from the symmetric square into modes ⊗ modes, with rows indexed by i·K + j.
pub fn sym_isometry(k: usize) -> DMatrix<C64> {
    let pairs = sym_pairs(k);
    let mut s = DMatrix::zeros(k * k, pairs.len());
    for (c, &(i, j)) in pairs.iter().enumerate() {
        if i == j {
            s[(i * k + i, c)] = C64::new(1.0, 0.0);
        } else {
            let w = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            s[(i * k + j, c)] = w;
            s[(j * k + i, c)] = w;
        }
    }
    s
}

/// Compresses a two-body operator given by its matrix elements ⟨e_r⊗e_s|V|e_p⊗e_q⟩
/// onto the symmetric square.
pub fn two_body_sym(modes: &ModeSet, v: impl Fn(usize, usize, usize, usize) -> C64) -> DMatrix<C64> {
    let k = modes.len();
    let full = DMatrix::from_fn(k * k, k * k, |a, b| v(a / k, a % k, b / k, b % k));
    let s = sym_isometry(k);
    s.adjoint() * full * s
}

fn pair_norm(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        std::f64::consts::SQRT_2
    }
}

fn one_body(basis: &FockBasis, state: &GibbsState) -> DMatrix<C64> {
    let k = basis.n_modes();
    let parts: Vec<DMatrix<C64>> = basis
        .sectors()
        .par_iter()
        .enumerate()
        .map(|(s, sec)| {
            let rho = state.density(s);
            let mut g = DMatrix::zeros(k, k);
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
                        occ[q] += 1;
                        let amp = ap * (occ[q] as f64).sqrt();
                        let tgt = basis.index_of(&occ).expect("one-body terms conserve n");
                        occ[q] -= 1;
                        if basis.sector_of(tgt) == s {
                            // Tr(a*_q a_p Γ) = Σ ⟨tgt|a*_q a_p|src⟩ Γ_{src,tgt}
                            g[(p, q)] += rho[(j, tgt - sec.start)] * amp;
                        }
                    }
                    occ[p] += 1;
                }
            }
            g
        })
        .collect();
    parts.into_iter().fold(DMatrix::zeros(k, k), |a, b| a + b)
}

fn two_body(basis: &FockBasis, state: &GibbsState) -> DMatrix<C64> {
    let k = basis.n_modes();
    let pairs = sym_pairs(k);
    let modes = basis.modes();
    let by_total: Vec<Vec<usize>> = pairs
        .iter()
        .map(|&(i, j)| {
            let t = modes.mode(i) + modes.mode(j);
            (0..pairs.len())
                .filter(|&c| modes.mode(pairs[c].0) + modes.mode(pairs[c].1) == t)
                .collect()
        })
        .collect();
    let np = pairs.len();
    let parts: Vec<DMatrix<C64>> = basis
        .sectors()
        .par_iter()
        .enumerate()
        .map(|(s, sec)| {
            let rho = state.density(s);
            let mut g = DMatrix::zeros(np, np);
            let mut occ = vec![0u16; k];
            for j in 0..sec.len {
                occ.copy_from_slice(basis.occupation(sec.start + j));
                for (a, &(p, q)) in pairs.iter().enumerate() {
                    if occ[p] == 0 {
                        continue;
                    }
                    let mut amp = (occ[p] as f64).sqrt();
                    occ[p] -= 1;
                    if occ[q] == 0 {
                        occ[p] += 1;
                        continue;
                    }
                    amp *= (occ[q] as f64).sqrt();
                    occ[q] -= 1;
                    for &b in &by_total[a] {
                        let (r, t) = pairs[b];
                        occ[t] += 1;
                        let mut amp2 = amp * (occ[t] as f64).sqrt();
                        occ[r] += 1;
                        amp2 *= (occ[r] as f64).sqrt();
                        let tgt = basis.index_of(&occ).expect("pair terms conserve n and momentum");
                        occ[r] -= 1;
                        occ[t] -= 1;
                        let w = 0.5 * pair_norm(p, q) * pair_norm(r, t) * amp2;
                        g[(a, b)] += rho[(j, tgt - sec.start)] * w;
                    }
                    occ[q] += 1;
                    occ[p] += 1;
                }
            }
            g
        })
        .collect();
    parts.into_iter().fold(DMatrix::zeros(np, np), |a, b| a + b)
}

/// Γ^{(1)}(p, q) = ⟨a*_q a_p⟩ for k = 1; the symmetric-square matrix
/// ⟨f_a|Γ^{(2)}|f_b⟩ for k = 2.
pub fn reduced_density(state: &GibbsState, k: usize) -> Result<ReducedDensity> {
    let basis = state.basis();
    let matrix = match k {
        1 => one_body(basis, state),
        2 => two_body(basis, state),
        _ => return Err(Error::UnsupportedOrder(k)),
    };
    let trace = matrix.trace().re;
    Ok(ReducedDensity { order: k, matrix, trace })
}
