use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A lattice momentum p ∈ Z².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode(pub i32, pub i32);

impl Mode {
    pub const ZERO: Mode = Mode(0, 0);

    pub fn norm_sq(self) -> i64 {
        let (a, b) = (self.0 as i64, self.1 as i64);
        a * a + b * b
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Stable 64-bit key, used to name per-mode random streams.
    pub fn key(self) -> u64 {
        ((self.0 as u32 as u64) << 32) | self.1 as u32 as u64
    }
}

impl std::ops::Add for Mode {
    type Output = Mode;
    fn add(self, o: Mode) -> Mode {
        Mode(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Sub for Mode {
    type Output = Mode;
    fn sub(self, o: Mode) -> Mode {
        Mode(self.0 - o.0, self.1 - o.1)
    }
}

impl std::ops::Neg for Mode {
    type Output = Mode;
    fn neg(self) -> Mode {
        Mode(-self.0, -self.1)
    }
}

impl std::ops::Mul<i32> for Mode {
    type Output = Mode;
    fn mul(self, n: i32) -> Mode {
        Mode(self.0 * n, self.1 * n)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// The dispersion h(p) = |p|² + 1.
pub fn dispersion(p: Mode) -> f64 {
    (p.norm_sq() + 1) as f64
}

/// All modes with h(p) ≤ Λ², ordered by (|p|², p₁, p₂).
#[derive(Clone, Debug)]
pub struct ModeSet {
    cutoff_sq: f64,
    modes: Vec<Mode>,
    index: HashMap<Mode, usize>,
}

impl PartialEq for ModeSet {
    fn eq(&self, other: &Self) -> bool {
        self.modes == other.modes
    }
}

/// Builds the spectral cutoff set {p : h(p) ≤ cutoff_sq}.
///
/// Values below 1 are clamped to the zero-mode set, the smallest admissible one.
pub fn mode_set(cutoff_sq: f64) -> ModeSet {
    let cutoff_sq = cutoff_sq.max(1.0);
    let r = (cutoff_sq - 1.0).sqrt().floor() as i32;
    let mut modes = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            let p = Mode(a, b);
            if dispersion(p) <= cutoff_sq {
                modes.push(p);
            }
        }
    }
    ModeSet::from_modes(cutoff_sq, modes)
}

impl ModeSet {
    /// A mode set from an explicit list; `cutoff_sq` is recorded as metadata.
    pub fn from_modes(cutoff_sq: f64, mut modes: Vec<Mode>) -> ModeSet {
        modes.sort_by_key(|p| (p.norm_sq(), p.0, p.1));
        modes.dedup();
        let index = modes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        ModeSet { cutoff_sq, modes, index }
    }

    pub fn cutoff_sq(&self) -> f64 {
        self.cutoff_sq
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> Mode {
        self.modes[i]
    }

    pub fn position(&self, p: Mode) -> Option<usize> {
        self.index.get(&p).copied()
    }

    pub fn contains(&self, p: Mode) -> bool {
        self.index.contains_key(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = Mode> + '_ {
        self.modes.iter().copied()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.modes.iter().map(|&p| dispersion(p)).collect()
    }

    /// Indicator of the modes with h ≤ `cutoff_sq`, in set order.
    pub fn below_mask(&self, cutoff_sq: f64) -> Vec<bool> {
        self.modes.iter().map(|&p| dispersion(p) <= cutoff_sq).collect()
    }

    /// All nonzero differences p − q of members, sorted and deduplicated.
    pub fn nonzero_differences(&self) -> Vec<Mode> {
        let mut out: Vec<Mode> = self
            .modes
            .iter()
            .flat_map(|&p| self.modes.iter().map(move |&q| p - q))
            .filter(|&k| k != Mode::ZERO)
            .collect();
        out.sort_by_key(|p| (p.norm_sq(), p.0, p.1));
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(Mode(0, 0)), 1.0);
        assert_eq!(dispersion(Mode(2, 1)), 6.0);
        assert_eq!(dispersion(Mode(0, -3)), 10.0);
    }

    #[test]
    fn mode_set_sizes() {
        assert_eq!(mode_set(1.0).modes(), &[Mode(0, 0)]);
        let five = mode_set(2.0);
        assert_eq!(five.len(), 5);
        for p in [Mode(0, 0), Mode(1, 0), Mode(-1, 0), Mode(0, 1), Mode(0, -1)] {
            assert!(five.contains(p));
        }
        assert_eq!(mode_set(5.0).len(), 13);
        assert_eq!(mode_set(10.0).len(), 29);
    }

    #[test]
    fn ordering_is_by_norm_then_lex() {
        let s = mode_set(5.0);
        assert_eq!(s.mode(0), Mode(0, 0));
        assert_eq!(s.mode(1), Mode(-1, 0));
        assert_eq!(s.mode(4), Mode(1, 0));
        for w in s.modes().windows(2) {
            assert!((w[0].norm_sq(), w[0].0, w[0].1) < (w[1].norm_sq(), w[1].0, w[1].1));
        }
        for (i, p) in s.iter().enumerate() {
            assert_eq!(s.position(p), Some(i));
        }
    }

    #[test]
    fn closed_under_negation() {
        let s = mode_set(17.0);
        assert!(s.iter().all(|p| s.contains(-p)));
    }

    #[test]
    fn mode_keys_are_distinct() {
        let s = mode_set(50.0);
        let keys: std::collections::HashSet<u64> = s.iter().map(Mode::key).collect();
        assert_eq!(keys.len(), s.len());
    }
}
