use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::gamma_lr;

use crate::classical::{accumulate, plain_estimates, sample_chunk_scaled, Field, McEstimate, McSpec};
use crate::fock::FockBasis;
use crate::gibbs::{reduced_density, GibbsState};
use crate::{Error, Result, C64};

/// Capped coherent vector W(u) in basis order.
#[derive(Clone, Debug)]
pub struct CoherentVector {
    pub amplitudes: Vec<C64>,
    /// 1 − Σ|amplitude|², the Poisson weight of particle numbers above the cap.
    pub dropped: f64,
}

/// Amplitudes e^{−‖u‖²/2} Π_p α_p^{n_p}/√(n_p!) of W(u) on the capped basis.
pub fn coherent_amplitudes(u: &Field, basis: &FockBasis) -> CoherentVector {
    let norm_sq = u.norm_sq();
    let logs: Vec<(f64, f64)> = u.alpha.iter().map(|a| (a.norm().ln(), a.arg())).collect();
    let ln_fact: Vec<f64> = (0..=basis.cap() as u64).map(ln_factorial).collect();
    let amplitudes = (0..basis.dim())
        .map(|i| {
            let mut log_mod = -0.5 * norm_sq;
            let mut phase = 0.0;
            for (&n, &(ln_abs, arg)) in basis.occupation(i).iter().zip(&logs) {
                if n == 0 {
                    continue;
                }
                if ln_abs == f64::NEG_INFINITY {
                    return C64::new(0.0, 0.0);
                }
                log_mod += n as f64 * ln_abs - 0.5 * ln_fact[n as usize];
                phase += n as f64 * arg;
            }
            C64::from_polar(log_mod.exp(), phase)
        })
        .collect();
    // Total particle number in W(u) is Poisson(‖u‖²).
    let dropped = if norm_sq == 0.0 { 0.0 } else { gamma_lr(basis.cap() as f64 + 1.0, norm_sq) };
    CoherentVector { amplitudes, dropped }
}

/// Lower symbol (λπ)^{−K} ⟨W(u/√λ), Γ W(u/√λ)⟩ of a state on a capped basis.
pub struct HusimiSampler<'a> {
    pub state: &'a GibbsState,
    pub lambda: f64,
    pub dropped_mass_tol: f64,
}

impl<'a> HusimiSampler<'a> {
    pub fn new(state: &'a GibbsState, lambda: f64) -> Self {
        HusimiSampler { state, lambda, dropped_mass_tol: 1e-8 }
    }

    fn scaled(&self, u: &Field) -> Field {
        let s = self.lambda.sqrt().recip();
        Field { alpha: u.alpha.iter().map(|a| a * s).collect() }
    }

    fn value(&self, w: &CoherentVector) -> f64 {
        let k = self.state.basis().n_modes() as i32;
        (self.lambda * std::f64::consts::PI).powi(-k) * self.state.quadratic_form(&w.amplitudes).max(0.0)
    }

    /// The density at u; fails when W(u/√λ) loses more than the tolerance to the cap.
    pub fn density(&self, u: &Field) -> Result<f64> {
        let w = coherent_amplitudes(&self.scaled(u), self.state.basis());
        if w.dropped > self.dropped_mass_tol {
            return Err(Error::DroppedMass { dropped: w.dropped, tol: self.dropped_mass_tol });
        }
        Ok(self.value(&w))
    }

    /// The density at u without the dropped-mass check. Γ is supported on the
    /// capped space, so this is exact for any u.
    pub fn density_unchecked(&self, u: &Field) -> f64 {
        self.value(&coherent_amplitudes(&self.scaled(u), self.state.basis()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HusimiMoments {
    /// ∫ husimi du, which should be 1.
    pub normalization: McEstimate,
    /// ∫ |⟨φ, u⟩|^{2n} husimi du for n = 1, 2.
    pub moments: [McEstimate; 2],
    /// Per-mode envelope variances.
    pub envelope: Vec<f64>,
}

/// Husimi moments by importance sampling from the complex Gaussian with
/// per-mode variance max(λ(n̄_p + 1), λ), n̄_p the state's occupation.
pub fn husimi_moments(sampler: &HusimiSampler, phi: &Field, spec: &McSpec) -> Result<HusimiMoments> {
    spec.validate()?;
    let state = sampler.state;
    let modes = state.basis().modes();
    if phi.alpha.len() != modes.len() {
        return Err(Error::Shape("test vector must live on the mode set".into()));
    }
    let g1 = reduced_density(state, 1)?;
    let lam = sampler.lambda;
    let envelope: Vec<f64> = (0..modes.len()).map(|p| (lam * (g1.matrix[(p, p)].re + 1.0)).max(lam)).collect();
    let sigmas: Vec<f64> = envelope.iter().map(|v| v.sqrt()).collect();
    let log_norm: f64 = envelope.iter().map(|v| (std::f64::consts::PI * v).ln()).sum();
    let blocks = accumulate(
        spec,
        2,
        |first, count| sample_chunk_scaled(modes, &sigmas, spec.seed, first, count),
        |u, out| {
            let log_g = -log_norm - u.alpha.iter().zip(&envelope).map(|(a, v)| a.norm_sqr() / v).sum::<f64>();
            let x = phi.inner(u).norm_sqr();
            out[0] = x;
            out[1] = x * x;
            sampler.density_unchecked(u) * (-log_g).exp()
        },
    );
    let (normalization, ys) = plain_estimates(&blocks, spec);
    Ok(HusimiMoments { normalization, moments: [ys[0], ys[1]], envelope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_basis;
    use crate::lattice::mode_set;

    #[test]
    fn vacuum_vector() {
        let b = build_basis(&mode_set(2.0), 3).unwrap();
        let w = coherent_amplitudes(&Field::zeros(5), &b);
        assert_eq!(w.amplitudes[0], C64::new(1.0, 0.0));
        assert_eq!(w.dropped, 0.0);
        assert!(w.amplitudes[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn single_mode_poisson() {
        let b = build_basis(&mode_set(1.0), 20).unwrap();
        let w = coherent_amplitudes(&Field { alpha: vec![C64::new(1.0, 0.0)] }, &b);
        let mut fact = 1.0;
        for n in 0..=20usize {
            if n > 0 {
                fact *= n as f64;
            }
            let i = b.index_of(&[n as u16]).unwrap();
            assert!((w.amplitudes[i].re - (-0.5f64).exp() / fact.sqrt()).abs() < 1e-15);
        }
        let kept: f64 = w.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        assert!(w.dropped < 1e-18 && w.dropped > 0.0);
        assert!(kept <= 1.0 + 1e-15);
    }

    #[test]
    fn vacuum_husimi_and_dropped_mass_error() {
        let b = build_basis(&mode_set(2.0), 4).unwrap();
        let vac = GibbsState::basis_state(&b, 0);
        let s = HusimiSampler::new(&vac, 0.5);
        let want = (0.5 * std::f64::consts::PI).powi(-5);
        assert!((s.density(&Field::zeros(5)).unwrap() - want).abs() < 1e-12 * want);
        let far = Field { alpha: vec![C64::new(3.0, 0.0); 5] };
        assert!(matches!(s.density(&far), Err(Error::DroppedMass { .. })));
        assert!(s.density_unchecked(&far) >= 0.0);
    }

    #[test]
    fn husimi_mc_matches_definetti_on_free_state() {
        use crate::bridge::definetti_moment;
        use crate::fock::build_kinetic;
        let modes = mode_set(2.0);
        let lam = 2.0;
        let b = build_basis(&modes, 10).unwrap();
        let st = crate::gibbs::gibbs(&build_kinetic(&b).scale(lam)).unwrap();
        let s = HusimiSampler::new(&st, lam);
        let phi = Field { alpha: vec![C64::new(0.6, 0.0), C64::new(0.0, 0.3), C64::new(0.2, 0.2), C64::new(0.0, 0.0), C64::new(-0.4, 0.1)] };
        let r = husimi_moments(&s, &phi, &McSpec { samples: 20_000, seed: 4 }).unwrap();
        assert!((r.normalization.mean - 1.0).abs() <= 3.0 * r.normalization.stderr, "{:?}", r.normalization);
        for n in 1..=2 {
            let exact = definetti_moment(&st, lam, &phi, n).unwrap();
            let mc = r.moments[n - 1];
            assert!((mc.mean - exact).abs() <= 3.0 * mc.stderr, "n = {n}: {} vs {exact} ± {}", mc.mean, mc.stderr);
        }
    }
}
