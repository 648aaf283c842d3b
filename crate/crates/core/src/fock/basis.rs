use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::lattice::{Mode, ModeSet};
use crate::{Error, Result};

pub const DEFAULT_BASIS_LIMIT: usize = 200_000;

/// A joint eigenspace of total particle number and total momentum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sector {
    pub n: usize,
    pub momentum: Mode,
    /// Global index of the first state; the sector's states are contiguous.
    pub start: usize,
    pub len: usize,
}

/// Occupation-number basis with total particle number at most `cap`.
///
/// States are grouped by sector, sectors are ordered by (n, m₁, m₂), and
/// inside a sector states follow the lexicographic order of their
/// occupation vectors, highest first.
#[derive(Debug)]
pub struct FockBasis {
    modes: ModeSet,
    cap: usize,
    occ: Vec<u16>,
    sectors: Vec<Sector>,
    state_sector: Vec<u32>,
    lookup: HashMap<Vec<u16>, u32>,
    sector_lookup: HashMap<(usize, Mode), usize>,
}

/// Σ_{n ≤ cap} C(n+K-1, K-1), as a float so that huge values do not overflow.
pub fn basis_dimension(k: usize, cap: usize) -> f64 {
    // C(cap+K, K) by the hockey-stick identity.
    let mut acc = 1.0f64;
    for j in 1..=k {
        acc *= (cap + j) as f64 / j as f64;
    }
    acc.round()
}

pub fn build_basis(modes: &ModeSet, cap: usize) -> Result<Arc<FockBasis>> {
    build_basis_with_limit(modes, cap, DEFAULT_BASIS_LIMIT)
}

pub fn build_basis_with_limit(modes: &ModeSet, cap: usize, limit: usize) -> Result<Arc<FockBasis>> {
    let k = modes.len();
    let dim = basis_dimension(k, cap);
    if dim > limit as f64 {
        return Err(Error::BasisTooLarge { dim, limit });
    }
    if cap > u16::MAX as usize {
        return Err(Error::InvalidParam(format!("cap {cap} exceeds {}", u16::MAX)));
    }
    let mut groups: BTreeMap<(usize, i32, i32), Vec<Vec<u16>>> = BTreeMap::new();
    let mut current = vec![0u16; k];
    enumerate(modes, cap, 0, 0, Mode::ZERO, &mut current, &mut groups);

    let mut occ = Vec::with_capacity(dim as usize * k);
    let mut sectors = Vec::with_capacity(groups.len());
    let mut state_sector = Vec::with_capacity(dim as usize);
    let mut lookup = HashMap::with_capacity(dim as usize);
    let mut sector_lookup = HashMap::with_capacity(groups.len());
    for ((n, m1, m2), states) in groups {
        let start = state_sector.len();
        let s = sectors.len();
        sector_lookup.insert((n, Mode(m1, m2)), s);
        sectors.push(Sector { n, momentum: Mode(m1, m2), start, len: states.len() });
        for st in states {
            lookup.insert(st.clone(), state_sector.len() as u32);
            occ.extend_from_slice(&st);
            state_sector.push(s as u32);
        }
    }
    Ok(Arc::new(FockBasis { modes: modes.clone(), cap, occ, sectors, state_sector, lookup, sector_lookup }))
}

fn enumerate(
    modes: &ModeSet,
    remaining: usize,
    pos: usize,
    n: usize,
    m: Mode,
    cur: &mut Vec<u16>,
    out: &mut BTreeMap<(usize, i32, i32), Vec<Vec<u16>>>,
) {
    if pos == modes.len() {
        out.entry((n, m.0, m.1)).or_default().push(cur.clone());
        return;
    }
    let p = modes.mode(pos);
    for c in (0..=remaining).rev() {
        cur[pos] = c as u16;
        enumerate(modes, remaining - c, pos + 1, n + c, m + p * c as i32, cur, out);
    }
    cur[pos] = 0;
}

impl FockBasis {
    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.state_sector.len()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn occupation(&self, i: usize) -> &[u16] {
        let k = self.n_modes();
        &self.occ[i * k..(i + 1) * k]
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        self.lookup.get(occupation).map(|&i| i as usize)
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn sector(&self, s: usize) -> &Sector {
        &self.sectors[s]
    }

    pub fn sector_of(&self, i: usize) -> usize {
        self.state_sector[i] as usize
    }

    pub fn sector_index(&self, n: usize, momentum: Mode) -> Option<usize> {
        self.sector_lookup.get(&(n, momentum)).copied()
    }

    /// Position of state `i` inside its sector.
    pub fn local_index(&self, i: usize) -> usize {
        i - self.sectors[self.sector_of(i)].start
    }

    pub fn total(&self, i: usize) -> usize {
        self.occupation(i).iter().map(|&c| c as usize).sum()
    }

    pub fn momentum(&self, i: usize) -> Mode {
        self.occupation(i)
            .iter()
            .enumerate()
            .fold(Mode::ZERO, |acc, (j, &c)| acc + self.modes.mode(j) * c as i32)
    }

    /// True when both bases have the same modes and cap (hence identical states).
    pub fn same_as(&self, other: &FockBasis) -> bool {
        std::ptr::eq(self, other) || (self.cap == other.cap && self.modes == other.modes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::mode_set;

    #[test]
    fn small_dimensions() {
        assert_eq!(build_basis(&mode_set(1.0), 2).unwrap().dim(), 3);
        let b = build_basis(&mode_set(2.0), 3).unwrap();
        assert_eq!(b.dim(), 56);
        assert_eq!(basis_dimension(5, 3), 56.0);
        assert_eq!(build_basis(&mode_set(2.0), 0).unwrap().dim(), 1);
    }

    #[test]
    fn sector_of_single_occupation() {
        let modes = mode_set(2.0);
        let b = build_basis(&modes, 3).unwrap();
        let mut occ = vec![0u16; 5];
        occ[modes.position(Mode(1, 0)).unwrap()] = 2;
        let i = b.index_of(&occ).unwrap();
        let s = b.sector(b.sector_of(i));
        assert_eq!((s.n, s.momentum), (2, Mode(2, 0)));
    }

    #[test]
    fn sectors_partition_states() {
        let b = build_basis(&mode_set(5.0), 3).unwrap();
        let mut covered = 0;
        for (idx, s) in b.sectors().iter().enumerate() {
            assert_eq!(s.start, covered);
            for i in s.start..s.start + s.len {
                assert_eq!(b.sector_of(i), idx);
                assert_eq!(b.total(i), s.n);
                assert_eq!(b.momentum(i), s.momentum);
                assert_eq!(b.index_of(b.occupation(i)), Some(i));
            }
            covered += s.len;
        }
        assert_eq!(covered, b.dim());
        assert_eq!(b.dim() as f64, basis_dimension(13, 3));
    }

    #[test]
    fn limit_is_enforced() {
        assert!(matches!(build_basis(&mode_set(2.0), 60), Err(Error::BasisTooLarge { .. })));
        assert!(build_basis_with_limit(&mode_set(2.0), 20, 60_000).is_ok());
    }

    #[test]
    fn ordering_is_deterministic() {
        let a = build_basis(&mode_set(2.0), 4).unwrap();
        let b = build_basis(&mode_set(2.0), 4).unwrap();
        assert_eq!(a.occ, b.occ);
        assert!(a.same_as(&b));
    }
}
