use nalgebra::{DMatrix, DVector};

use crate::classical::{tensor_power, Field};
use crate::gibbs::{reduced_density, sym_isometry, GibbsState};
use crate::{Error, Result, C64};

/// Moment matrices ∫|u^{⊗k}⟩⟨u^{⊗k}| dμ of the lower symbol for k = 1, 2, in
/// the bases of the reduced densities.
#[derive(Clone, Debug)]
pub struct DeFinettiMatrices {
    /// λΓ^{(1)} + λ·1
    pub m1: DMatrix<C64>,
    /// 2λ²(Γ^{(2)} + 2 Γ^{(1)}⊗_s 1 + 1_s)
    pub m2: DMatrix<C64>,
}

/// Assembles the de Finetti moment matrices from the state's reduced densities.
pub fn definetti_matrices(state: &GibbsState, lambda: f64) -> Result<DeFinettiMatrices> {
    let k = state.basis().n_modes();
    let g1 = reduced_density(state, 1)?.matrix;
    let g2 = reduced_density(state, 2)?.matrix;
    let m1 = (&g1 + DMatrix::<C64>::identity(k, k)) * C64::new(lambda, 0.0);
    let s = sym_isometry(k);
    let g1_sym = s.adjoint() * g1.kronecker(&DMatrix::<C64>::identity(k, k)) * &s;
    let ks = g2.nrows();
    let m2 = (g2 + g1_sym * C64::new(2.0, 0.0) + DMatrix::<C64>::identity(ks, ks)) * C64::new(2.0 * lambda * lambda, 0.0);
    Ok(DeFinettiMatrices { m1, m2 })
}

impl DeFinettiMatrices {
    /// ∫ |⟨φ, u⟩|^{2n} dμ for n ∈ {1, 2}.
    pub fn moment(&self, phi: &Field, n: usize) -> Result<f64> {
        let m = match n {
            1 => &self.m1,
            2 => &self.m2,
            _ => return Err(Error::UnsupportedOrder(n)),
        };
        if phi.alpha.len() != self.m1.nrows() {
            return Err(Error::Shape("test vector must live on the mode set".into()));
        }
        // |⟨φ, u⟩|^{2n} = |⟨φ^{⊗n}, u^{⊗n}⟩|², with both tensors in the same coordinates.
        let v = DVector::from_vec(tensor_power(phi, n));
        Ok((v.adjoint() * m * &v)[(0, 0)].re)
    }
}

/// ∫ |⟨φ, u⟩|^{2n} dμ^λ of the lower symbol, from the de Finetti identity.
pub fn definetti_moment(state: &GibbsState, lambda: f64, phi: &Field, n: usize) -> Result<f64> {
    if !(n == 1 || n == 2) {
        return Err(Error::UnsupportedOrder(n));
    }
    definetti_matrices(state, lambda)?.moment(phi, n)
}

/// Frobenius norm of A − B.
pub fn hs_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok((a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, build_full_hamiltonian};
    use crate::lattice::{mode_set, Interaction, KernelParams};

    #[test]
    fn vacuum_moments() {
        let b = build_basis(&mode_set(2.0), 3).unwrap();
        let vac = GibbsState::basis_state(&b, 0);
        let phi = Field { alpha: (0..5).map(|i| C64::new(0.1 * i as f64, 0.3 - 0.05 * i as f64)).collect() };
        let n2 = phi.norm_sq();
        assert!((definetti_moment(&vac, 0.4, &phi, 1).unwrap() - 0.4 * n2).abs() < 1e-15);
        assert!((definetti_moment(&vac, 0.4, &phi, 2).unwrap() - 2.0 * 0.16 * n2 * n2).abs() < 1e-15);
        assert!(definetti_moment(&vac, 0.4, &phi, 3).is_err());
    }

    #[test]
    fn norm_identities() {
        let modes = mode_set(2.0);
        let b = build_basis(&modes, 6).unwrap();
        let lam = 0.9;
        let st = crate::gibbs::gibbs(&build_full_hamiltonian(
            &b,
            Interaction::Bessel(KernelParams::new(2.0).unwrap()),
            lam,
            1.0,
        ))
        .unwrap();
        let m = definetti_matrices(&st, lam).unwrap();
        let n1 = st.diagonal_expectation(|o| o.iter().map(|&x| x as f64).sum());
        let nn = st.diagonal_expectation(|o| {
            let n: f64 = o.iter().map(|&x| x as f64).sum();
            n * (n - 1.0)
        });
        let k = 5.0;
        assert!((m.m1.trace().re - (lam * n1 + lam * k)).abs() < 1e-10);
        let want = lam * lam * (nn + 2.0 * (k + 1.0) * n1 + k * (k + 1.0));
        assert!((m.m2.trace().re - want).abs() < 1e-10);
    }

    #[test]
    fn hs_properties() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)]));
        let z = DMatrix::zeros(2, 2);
        assert_eq!(hs_distance(&z, &a).unwrap(), 5.0);
        assert_eq!(hs_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hs_distance(&a, &z).unwrap(), hs_distance(&z, &a).unwrap());
        assert!(hs_distance(&a, &DMatrix::zeros(3, 3)).is_err());
    }
}
