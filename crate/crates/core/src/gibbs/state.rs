use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::fock::{BlockOperator, FockBasis};
use crate::{Error, Result, C64};

/// Normalized Gibbs state e^{-H}/Z on a truncated Fock space, stored as one
/// density block per sector together with the spectrum.
#[derive(Clone, Debug)]
pub struct GibbsState {
    basis: Arc<FockBasis>,
    eigenvalues: Vec<DVector<f64>>,
    weights: Vec<DVector<f64>>,
    energy_shift: f64,
    log_z: f64,
    density: Vec<DMatrix<C64>>,
}

enum Vectors {
    Identity,
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

fn is_diagonal(m: &DMatrix<C64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

fn decompose(basis: &FockBasis, s: usize, m: &DMatrix<C64>) -> Result<(Vec<f64>, Vectors)> {
    let sec = basis.sector(s);
    let fail = || Error::Eigensolver { n: sec.n, m1: sec.momentum.0, m2: sec.momentum.1 };
    if is_diagonal(m) {
        return Ok(((0..m.nrows()).map(|i| m[(i, i)].re).collect(), Vectors::Identity));
    }
    if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::try_new(re, EIG_EPS, EIG_MAX_ITER).ok_or_else(fail)?;
        Ok((eig.eigenvalues.iter().copied().collect(), Vectors::Real(eig.eigenvectors)))
    } else {
        let eig = SymmetricEigen::try_new(m.clone(), EIG_EPS, EIG_MAX_ITER).ok_or_else(fail)?;
        Ok((eig.eigenvalues.iter().copied().collect(), Vectors::Complex(eig.eigenvectors)))
    }
}

fn weighted_projector(vectors: &Vectors, w: &[f64]) -> DMatrix<C64> {
    match vectors {
        Vectors::Identity => DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|&x| C64::new(x, 0.0)))),
        Vectors::Real(v) => {
            let mut vw = v.clone();
            for (j, mut col) in vw.column_iter_mut().enumerate() {
                col *= w[j];
            }
            (vw * v.transpose()).map(|x| C64::new(x, 0.0))
        }
        Vectors::Complex(v) => {
            let mut vw = v.clone();
            for (j, mut col) in vw.column_iter_mut().enumerate() {
                col *= C64::new(w[j], 0.0);
            }
            vw * v.adjoint()
        }
    }
}

/// Gibbs state of a Hermitian, sector-conserving operator.
pub fn gibbs(h: &BlockOperator) -> Result<GibbsState> {
    if !h.is_conserving() {
        return Err(Error::InvalidParam("Gibbs states need a sector-conserving Hamiltonian".into()));
    }
    let basis = h.basis().clone();
    let decomposed: Vec<(Vec<f64>, Vectors)> = h
        .blocks()
        .par_iter()
        .enumerate()
        .map(|(s, m)| decompose(&basis, s, m))
        .collect::<Result<_>>()?;
    let shift = decomposed
        .iter()
        .flat_map(|(e, _)| e.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let boltzmann: Vec<Vec<f64>> = decomposed
        .iter()
        .map(|(e, _)| e.iter().map(|x| (-(x - shift)).exp()).collect())
        .collect();
    let total: f64 = boltzmann.iter().map(|b| b.iter().sum::<f64>()).sum();
    let log_z = total.ln() - shift;
    let parts: Vec<(DVector<f64>, DVector<f64>, DMatrix<C64>)> = decomposed
        .into_par_iter()
        .zip(boltzmann.into_par_iter())
        .map(|((e, vectors), b)| {
            let w: Vec<f64> = b.iter().map(|x| x / total).collect();
            let rho = weighted_projector(&vectors, &w);
            let mut order: Vec<usize> = (0..e.len()).collect();
            order.sort_by(|&i, &j| e[i].total_cmp(&e[j]));
            let values = DVector::from_iterator(e.len(), order.iter().map(|&i| e[i]));
            let weights = DVector::from_iterator(e.len(), order.iter().map(|&i| w[i]));
            (values, weights, rho)
        })
        .collect();
    let mut eigenvalues = Vec::with_capacity(parts.len());
    let mut weights = Vec::with_capacity(parts.len());
    let mut density = Vec::with_capacity(parts.len());
    for (e, w, r) in parts {
        eigenvalues.push(e);
        weights.push(w);
        density.push(r);
    }
    Ok(GibbsState { basis, eigenvalues, weights, energy_shift: shift, log_z, density })
}

impl GibbsState {
    /// The pure state |i⟩⟨i| on a basis vector, mostly useful as a test fixture.
    pub fn basis_state(basis: &Arc<FockBasis>, i: usize) -> Self {
        let s = basis.sector_of(i);
        let density = basis
            .sectors()
            .iter()
            .enumerate()
            .map(|(t, sec)| {
                let mut m = DMatrix::zeros(sec.len, sec.len);
                if t == s {
                    let l = basis.local_index(i);
                    m[(l, l)] = C64::new(1.0, 0.0);
                }
                m
            })
            .collect();
        let weights = basis
            .sectors()
            .iter()
            .enumerate()
            .map(|(t, sec)| DVector::from_fn(sec.len, |j, _| if t == s && j == 0 { 1.0 } else { 0.0 }))
            .collect();
        let eigenvalues = basis.sectors().iter().map(|sec| DVector::zeros(sec.len)).collect();
        GibbsState { basis: basis.clone(), eigenvalues, weights, energy_shift: 0.0, log_z: 0.0, density }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    /// Sector eigenvalues in ascending order.
    pub fn eigenvalues(&self, s: usize) -> &DVector<f64> {
        &self.eigenvalues[s]
    }

    /// Probabilities of the sector eigenpairs, aligned with [`Self::eigenvalues`].
    pub fn weights(&self, s: usize) -> &DVector<f64> {
        &self.weights[s]
    }

    pub fn energy_shift(&self) -> f64 {
        self.energy_shift
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn density(&self, s: usize) -> &DMatrix<C64> {
        &self.density[s]
    }

    pub fn densities(&self) -> &[DMatrix<C64>] {
        &self.density
    }

    /// ⟨i|Γ|i⟩ for every basis state, in basis order.
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        self.density.iter().flat_map(|m| (0..m.nrows()).map(move |i| m[(i, i)].re)).collect()
    }

    /// Σ_i ⟨i|Γ|i⟩ f(occupation_i), the expectation of an occupation-diagonal observable.
    pub fn diagonal_expectation(&self, f: impl Fn(&[u16]) -> f64) -> f64 {
        self.diagonal_probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| p * f(self.basis.occupation(i)))
            .sum()
    }

    /// ⟨ψ|Γ|ψ⟩ for a vector in basis order.
    pub fn quadratic_form(&self, psi: &[C64]) -> f64 {
        let mut acc = 0.0;
        for (s, sec) in self.basis.sectors().iter().enumerate() {
            let v = &psi[sec.start..sec.start + sec.len];
            if v.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let rho = &self.density[s];
            for j in 0..sec.len {
                if v[j].norm_sqr() == 0.0 {
                    continue;
                }
                let mut col = C64::new(0.0, 0.0);
                for i in 0..sec.len {
                    col += v[i].conj() * rho[(i, j)];
                }
                acc += (col * v[j]).re;
            }
        }
        acc
    }
}

/// Tr(AΓ). Only the sector-diagonal blocks of A contribute.
pub fn expectation(state: &GibbsState, a: &BlockOperator) -> Result<C64> {
    if !Arc::ptr_eq(state.basis(), a.basis()) && !state.basis().same_as(a.basis()) {
        return Err(Error::BasisMismatch);
    }
    let mut acc = C64::new(0.0, 0.0);
    for (blk, rho) in a.blocks().iter().zip(state.densities()) {
        let n = blk.nrows();
        for j in 0..n {
            for i in 0..n {
                acc += blk[(i, j)] * rho[(j, i)];
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, build_full_hamiltonian, build_kinetic, build_number};
    use crate::freegas::{capped_free_partition, Region};
    use crate::lattice::{mode_set, Interaction, KernelParams};

    fn bessel() -> Interaction {
        Interaction::Bessel(KernelParams::new(2.0).unwrap())
    }

    #[test]
    fn zero_hamiltonian_is_uniform() {
        let b = build_basis(&mode_set(2.0), 2).unwrap();
        let g = gibbs(&BlockOperator::zeros(&b)).unwrap();
        let d = b.dim() as f64;
        assert!((g.log_z() - d.ln()).abs() < 1e-13);
        for p in g.diagonal_probabilities() {
            assert!((p - 1.0 / d).abs() < 1e-15);
        }
    }

    #[test]
    fn single_mode_free() {
        let b = build_basis(&mode_set(1.0), 20).unwrap();
        let g = gibbs(&build_kinetic(&b)).unwrap();
        let z: f64 = (0..=20).map(|n| (-(n as f64)).exp()).sum();
        assert!((g.log_z() - z.ln()).abs() < 1e-13);
        let n = expectation(&g, &build_number(&b, Region::All)).unwrap();
        let want: f64 = (0..=20).map(|n| n as f64 * (-(n as f64)).exp()).sum::<f64>() / z;
        assert!((n.re - want).abs() < 1e-13 && n.im == 0.0);
        assert!((expectation(&g, &BlockOperator::identity(&b)).unwrap().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn free_reference_matches_dp() {
        let modes = mode_set(2.0);
        let b = build_basis(&modes, 6).unwrap();
        let g = gibbs(&build_kinetic(&b).scale(0.7)).unwrap();
        assert!((g.log_z() - capped_free_partition(&modes, 6, 0.7).ln()).abs() < 1e-10);
    }

    #[test]
    fn interacting_state_invariants() {
        let modes = mode_set(2.0);
        let b = build_basis(&modes, 5).unwrap();
        let h = build_full_hamiltonian(&b, bessel(), 1.0, 1.0);
        let g = gibbs(&h).unwrap();
        let total: f64 = (0..b.sectors().len()).map(|s| g.weights(s).sum()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let z: f64 = (0..b.sectors().len())
            .map(|s| g.eigenvalues(s).iter().map(|e| (-e).exp()).sum::<f64>())
            .sum();
        assert!((g.log_z() - z.ln()).abs() < 1e-10);
        for s in 0..b.sectors().len() {
            let e = g.eigenvalues(s);
            assert!(e.iter().zip(e.iter().skip(1)).all(|(a, b)| a <= b));
            assert!(g.density(s).iter().all(|z| z.is_finite()));
        }
        // Linearity of the expectation.
        let n = build_number(&b, Region::All);
        let k = build_kinetic(&b);
        let lhs = expectation(&g, &n.scale(2.0).add(&k.scale(-0.3)).unwrap()).unwrap();
        let rhs = expectation(&g, &n).unwrap() * 2.0 - expectation(&g, &k).unwrap() * 0.3;
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(expectation(&g, &h).unwrap().im.abs() < 1e-10);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let b1 = build_basis(&mode_set(2.0), 2).unwrap();
        let b2 = build_basis(&mode_set(2.0), 3).unwrap();
        let g = gibbs(&BlockOperator::zeros(&b1)).unwrap();
        assert!(matches!(expectation(&g, &BlockOperator::zeros(&b2)), Err(Error::BasisMismatch)));
    }
}
