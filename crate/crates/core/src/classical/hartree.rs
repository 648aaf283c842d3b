use super::Field;
use crate::lattice::{dispersion, Interaction, Mode, ModeSet};
use crate::{C64, TORUS_AREA};

/// ⟨u, e_k u⟩ = (2π)^{-1} Σ_p conj(α_{p+k}) α_p over p with p, p+k in the set.
pub fn pair_density(modes: &ModeSet, u: &Field, k: Mode) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (i, p) in modes.iter().enumerate() {
        if let Some(j) = modes.position(p + k) {
            acc += u.alpha[j].conj() * u.alpha[i];
        }
    }
    acc / (2.0 * std::f64::consts::PI)
}

/// Tr(P h^{-1}).
pub fn trace_inverse_h(modes: &ModeSet) -> f64 {
    modes.iter().map(|p| 1.0 / dispersion(p)).sum()
}

/// D_P with its momentum-transfer tables precomputed, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Hartree {
    off: bool,
    /// (v̂(k), index pairs (i, j) with mode j = mode i + k) for each k ≠ 0.
    transfers: Vec<(f64, Vec<(usize, usize)>)>,
    trace_inv_h: f64,
}

impl Hartree {
    pub fn new(modes: &ModeSet, interaction: Interaction) -> Self {
        let transfers = modes
            .nonzero_differences()
            .into_iter()
            .map(|k| {
                let pairs = modes.iter().enumerate().filter_map(|(i, p)| modes.position(p + k).map(|j| (i, j))).collect();
                (interaction.coeff(k), pairs)
            })
            .collect();
        Hartree { off: matches!(interaction, Interaction::Off), transfers, trace_inv_h: trace_inverse_h(modes) }
    }

    pub fn eval(&self, u: &Field) -> f64 {
        if self.off {
            return 0.0;
        }
        let mut quartic = 0.0;
        for (v, pairs) in &self.transfers {
            let mut rho = C64::new(0.0, 0.0);
            for &(i, j) in pairs {
                rho += u.alpha[j].conj() * u.alpha[i];
            }
            quartic += v * rho.norm_sqr();
        }
        let quartic = quartic / TORUS_AREA;
        let centered = u.norm_sq() - self.trace_inv_h;
        0.5 * quartic + centered * centered / (2.0 * TORUS_AREA)
    }
}

/// D_P(u) = ½ Σ_{k≠0} v̂(k)|⟨u, e_k u⟩|² + (‖u‖² − Tr(Ph^{-1}))²/(2(2π)²).
/// [`Interaction::Off`] turns off both pieces.
pub fn hartree_dp(modes: &ModeSet, u: &Field, interaction: Interaction) -> f64 {
    Hartree::new(modes, interaction).eval(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::sample_gaussian;
    use crate::lattice::{mode_set, KernelParams};

    fn bessel() -> Interaction {
        Interaction::Bessel(KernelParams::new(2.0).unwrap())
    }

    #[test]
    fn vacuum_value() {
        let modes = mode_set(2.0);
        let d = hartree_dp(&modes, &Field::zeros(5), bessel());
        assert!((d - 9.0 / (8.0 * std::f64::consts::PI.powi(2))).abs() < 1e-15);
        assert!((d - 0.113986).abs() < 1e-6);
    }

    #[test]
    fn single_mode_field() {
        let modes = mode_set(2.0);
        let mut u = Field::zeros(5);
        let a = C64::new(0.3, -1.1);
        u.alpha[modes.position(Mode(1, 0)).unwrap()] = a;
        let tau = 2.0 * std::f64::consts::PI;
        assert!((pair_density(&modes, &u, Mode::ZERO).re - a.norm_sqr() / tau).abs() < 1e-15);
        for k in modes.nonzero_differences() {
            assert_eq!(pair_density(&modes, &u, k).norm(), 0.0);
        }
    }

    #[test]
    fn symmetries() {
        let modes = mode_set(5.0);
        for i in 0..20 {
            let u = sample_gaussian(&modes, 11, i);
            for k in modes.nonzero_differences() {
                let d = pair_density(&modes, &u, k) - pair_density(&modes, &u, -k).conj();
                assert!(d.norm() < 1e-14);
            }
            let d = hartree_dp(&modes, &u, bessel());
            assert!(d >= 0.0);
            let mut direct = 0.0;
            for k in modes.nonzero_differences() {
                direct += bessel().coeff(k) * pair_density(&modes, &u, k).norm_sqr();
            }
            let centered = u.norm_sq() - trace_inverse_h(&modes);
            let direct = 0.5 * direct + centered * centered / (2.0 * TORUS_AREA);
            assert!((direct - d).abs() < 1e-12 * d.max(1.0));
            let phase = C64::from_polar(1.0, 0.7);
            let rotated = Field { alpha: u.alpha.iter().map(|a| a * phase).collect() };
            assert!((hartree_dp(&modes, &rotated, bessel()) - d).abs() <= 1e-15 * d.max(1.0));
            let shift = [0.3, -1.9];
            let translated = Field {
                alpha: modes
                    .iter()
                    .zip(&u.alpha)
                    .map(|(p, a)| a * C64::from_polar(1.0, -(p.0 as f64 * shift[0] + p.1 as f64 * shift[1])))
                    .collect(),
            };
            assert!((hartree_dp(&modes, &translated, bessel()) - d).abs() < 1e-12);
        }
    }
}
