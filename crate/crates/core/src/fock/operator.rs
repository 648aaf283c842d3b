use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde_json::json;

use super::FockBasis;
use crate::{Error, Result, C64};

/// An operator on a truncated Fock space stored as dense sector blocks.
///
/// `diag[s]` maps sector s to itself. Operators that change total momentum
/// (such as density modes ρ_k) keep their couplings in `offdiag`, keyed by
/// (row sector, column sector).
#[derive(Clone, Debug)]
pub struct BlockOperator {
    basis: Arc<FockBasis>,
    diag: Vec<DMatrix<C64>>,
    offdiag: BTreeMap<(usize, usize), DMatrix<C64>>,
}

impl BlockOperator {
    pub fn zeros(basis: &Arc<FockBasis>) -> Self {
        let diag = basis.sectors().iter().map(|s| DMatrix::zeros(s.len, s.len)).collect();
        Self { basis: basis.clone(), diag, offdiag: BTreeMap::new() }
    }

    pub fn identity(basis: &Arc<FockBasis>) -> Self {
        Self::from_diagonal(basis, |_| 1.0)
    }

    /// Diagonal operator with entry `f(i)` on global state i.
    pub fn from_diagonal(basis: &Arc<FockBasis>, f: impl Fn(usize) -> f64) -> Self {
        let diag = basis
            .sectors()
            .iter()
            .map(|s| DMatrix::from_fn(s.len, s.len, |r, c| if r == c { C64::new(f(s.start + r), 0.0) } else { C64::new(0.0, 0.0) }))
            .collect();
        Self { basis: basis.clone(), diag, offdiag: BTreeMap::new() }
    }

    pub(crate) fn from_parts(
        basis: &Arc<FockBasis>,
        diag: Vec<DMatrix<C64>>,
        offdiag: BTreeMap<(usize, usize), DMatrix<C64>>,
    ) -> Self {
        Self { basis: basis.clone(), diag, offdiag }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn block(&self, s: usize) -> &DMatrix<C64> {
        &self.diag[s]
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.diag
    }

    pub fn offdiag(&self) -> &BTreeMap<(usize, usize), DMatrix<C64>> {
        &self.offdiag
    }

    pub fn into_blocks(self) -> Vec<DMatrix<C64>> {
        self.diag
    }

    /// True when no block couples different sectors.
    pub fn is_conserving(&self) -> bool {
        self.offdiag.values().all(|m| m.iter().all(|z| z.norm() == 0.0))
    }

    /// Matrix element ⟨i|A|j⟩ for global indices.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let (si, sj) = (self.basis.sector_of(i), self.basis.sector_of(j));
        let (li, lj) = (self.basis.local_index(i), self.basis.local_index(j));
        if si == sj {
            self.diag[si][(li, lj)]
        } else {
            self.offdiag.get(&(si, sj)).map_or(C64::new(0.0, 0.0), |m| m[(li, lj)])
        }
    }

    fn check(&self, other: &BlockOperator) -> Result<()> {
        if self.basis.same_as(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    fn all_blocks(&self) -> impl Iterator<Item = ((usize, usize), &DMatrix<C64>)> {
        self.diag.iter().enumerate().map(|(s, m)| ((s, s), m)).chain(self.offdiag.iter().map(|(&k, m)| (k, m)))
    }

    fn from_block_map(basis: &Arc<FockBasis>, map: BTreeMap<(usize, usize), DMatrix<C64>>) -> Self {
        let mut out = Self::zeros(basis);
        for ((r, c), m) in map {
            if r == c {
                out.diag[r] = m;
            } else {
                out.offdiag.insert((r, c), m);
            }
        }
        out
    }

    fn zip_with(&self, other: &BlockOperator, f: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>) -> Result<Self> {
        self.check(other)?;
        let mut map: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
        for (key, m) in self.all_blocks() {
            let zero = DMatrix::zeros(m.nrows(), m.ncols());
            let o = if key.0 == key.1 { &other.diag[key.0] } else { other.offdiag.get(&key).unwrap_or(&zero) };
            map.insert(key, f(m, o));
        }
        for (key, o) in other.offdiag.iter() {
            if !map.contains_key(key) {
                map.insert(*key, f(&DMatrix::zeros(o.nrows(), o.ncols()), o));
            }
        }
        Ok(Self::from_block_map(&self.basis, map))
    }

    pub fn add(&self, other: &BlockOperator) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &BlockOperator) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, x: f64) -> Self {
        let mut out = self.clone();
        out.diag.iter_mut().for_each(|m| *m *= C64::new(x, 0.0));
        out.offdiag.values_mut().for_each(|m| *m *= C64::new(x, 0.0));
        out
    }

    pub fn scale_complex(&self, z: C64) -> Self {
        let mut out = self.clone();
        out.diag.iter_mut().for_each(|m| *m *= z);
        out.offdiag.values_mut().for_each(|m| *m *= z);
        out
    }

    /// A + x·1.
    pub fn add_identity(&self, x: f64) -> Self {
        let mut out = self.clone();
        for m in out.diag.iter_mut() {
            for i in 0..m.nrows() {
                m[(i, i)] += C64::new(x, 0.0);
            }
        }
        out
    }

    pub fn mul(&self, other: &BlockOperator) -> Result<Self> {
        self.check(other)?;
        let mut by_row: BTreeMap<usize, Vec<(usize, &DMatrix<C64>)>> = BTreeMap::new();
        for ((r, c), m) in other.all_blocks() {
            by_row.entry(r).or_default().push((c, m));
        }
        let mut map: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
        for ((i, j), a) in self.all_blocks() {
            if let Some(list) = by_row.get(&j) {
                for &(l, b) in list {
                    let prod = a * b;
                    match map.get_mut(&(i, l)) {
                        Some(acc) => *acc += prod,
                        None => {
                            map.insert((i, l), prod);
                        }
                    }
                }
            }
        }
        Ok(Self::from_block_map(&self.basis, map))
    }

    pub fn adjoint(&self) -> Self {
        let diag = self.diag.iter().map(|m| m.adjoint()).collect();
        let offdiag = self.offdiag.iter().map(|(&(r, c), m)| ((c, r), m.adjoint())).collect();
        Self { basis: self.basis.clone(), diag, offdiag }
    }

    /// max |A - A*| over all stored entries.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    pub fn max_abs(&self) -> f64 {
        self.all_blocks().flat_map(|(_, m)| m.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Entrywise max |A - B|.
    pub fn max_abs_diff(&self, other: &BlockOperator) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Full dense matrix in global indices (small bases only).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.basis.dim();
        let mut out = DMatrix::zeros(d, d);
        for ((r, c), m) in self.all_blocks() {
            let (rs, cs) = (self.basis.sector(r).start, self.basis.sector(c).start);
            out.view_mut((rs, cs), (m.nrows(), m.ncols())).copy_from(m);
        }
        out
    }

    /// JSON dump: one record per stored block with its sector keys and the
    /// row-major list of [re, im] pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let sector_json = |s: usize| {
            let sec = self.basis.sector(s);
            json!({ "n": sec.n, "m": [sec.momentum.0, sec.momentum.1] })
        };
        let blocks: Vec<_> = self
            .all_blocks()
            .map(|((r, c), m)| {
                let data: Vec<[f64; 2]> = (0..m.nrows())
                    .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
                    .collect();
                json!({
                    "row_sector": sector_json(r),
                    "col_sector": sector_json(c),
                    "rows": m.nrows(),
                    "cols": m.ncols(),
                    "data": data,
                })
            })
            .collect();
        let modes: Vec<[i32; 2]> = self.basis.modes().iter().map(|p| [p.0, p.1]).collect();
        json!({
            "format": "bosefield.block_operator",
            "version": 1,
            "modes": modes,
            "cap": self.basis.cap(),
            "blocks": blocks,
        })
    }
}

pub fn commutator(a: &BlockOperator, b: &BlockOperator) -> Result<BlockOperator> {
    a.mul(b)?.sub(&b.mul(a)?)
}

/// [A, [H, A]].
pub fn double_commutator(a: &BlockOperator, h: &BlockOperator) -> Result<BlockOperator> {
    commutator(a, &commutator(h, a)?)
}
