use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{dispersion, Mode, ModeSet};
use crate::C64;

/// Samples generated per substream seek; also the Monte-Carlo block size.
pub const CHUNK: usize = 4096;

/// u = Σ α_p e_p on the span of a mode set, coefficients in mode-set order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub alpha: Vec<C64>,
}

impl Field {
    pub fn zeros(k: usize) -> Self {
        Field { alpha: vec![C64::new(0.0, 0.0); k] }
    }

    pub fn norm_sq(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨φ, u⟩ = Σ conj(φ_p) α_p.
    pub fn inner(&self, other: &Field) -> C64 {
        self.alpha.iter().zip(&other.alpha).map(|(a, b)| a.conj() * b).sum()
    }
}

fn unit_open(x: u64) -> f64 {
    // (0, 1], so that ln never sees zero.
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn substream(seed: u64, p: Mode, first_sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p.key());
    rng.set_word_pos(first_sample as u128 * 4);
    rng
}

fn draw(rng: &mut ChaCha8Rng, sigma: f64) -> C64 {
    let r = sigma * (-unit_open(rng.next_u64()).ln()).sqrt();
    let phase = std::f64::consts::TAU * unit_open(rng.next_u64());
    C64::from_polar(r, phase)
}

/// Gaussian coefficients of samples first..first+count, returned per mode.
///
/// Every (seed, mode, sample) triple owns four 32-bit words of a ChaCha8
/// stream keyed by the mode, so a mode's coefficient does not depend on which
/// other modes are drawn. Nested mode sets therefore share their common
/// coordinates sample by sample.
pub fn sample_chunk(modes: &ModeSet, seed: u64, first: u64, count: usize) -> Vec<Vec<C64>> {
    let sigmas: Vec<f64> = modes.iter().map(|p| dispersion(p).recip().sqrt()).collect();
    sample_chunk_scaled(modes, &sigmas, seed, first, count)
}

/// As [`sample_chunk`] with per-mode standard deviations σ_p (E|α_p|² = σ_p²).
pub fn sample_chunk_scaled(modes: &ModeSet, sigmas: &[f64], seed: u64, first: u64, count: usize) -> Vec<Vec<C64>> {
    modes
        .iter()
        .zip(sigmas)
        .map(|(p, &sigma)| {
            let mut rng = substream(seed, p, first);
            (0..count).map(|_| draw(&mut rng, sigma)).collect()
        })
        .collect()
}

/// Sample `index` of the Gaussian measure with covariance h^{-1} on the mode set.
pub fn sample_gaussian(modes: &ModeSet, seed: u64, index: u64) -> Field {
    Field { alpha: sample_chunk(modes, seed, index, 1).into_iter().map(|v| v[0]).collect() }
}
