use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_chunk, Field, Hartree, CHUNK};
use crate::gibbs::sym_pairs;
use crate::lattice::{mode_set, Interaction, ModeSet};
use crate::{Error, Result, C64};

/// Sample count and seed of a Monte-Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
}

impl McSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1000 {
            return Err(Error::InvalidParam(format!("{} samples; at least 1000 are required", self.samples)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Delta-method (ratio) or plain CLT standard error.
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Blocked jackknife over blocks of [`CHUNK`] samples.
    pub jackknife_stderr: f64,
}

/// Per-block sums of the weight w and the weighted observables y_j = w f_j.
#[derive(Clone, Debug)]
pub struct Sums {
    n: usize,
    sw: f64,
    sww: f64,
    sy: Vec<f64>,
    syy: Vec<f64>,
    syw: Vec<f64>,
}

impl Sums {
    fn new(m: usize) -> Self {
        Sums { n: 0, sw: 0.0, sww: 0.0, sy: vec![0.0; m], syy: vec![0.0; m], syw: vec![0.0; m] }
    }

    fn merge(&mut self, o: &Sums) {
        self.n += o.n;
        self.sw += o.sw;
        self.sww += o.sww;
        for j in 0..self.sy.len() {
            self.sy[j] += o.sy[j];
            self.syy[j] += o.syy[j];
            self.syw[j] += o.syw[j];
        }
    }
}

/// Draws `spec.samples` fields in blocks of [`CHUNK`], evaluates the weight and
/// `m` observables per field, and returns the per-block sums in block order.
/// `sampler(first, count)` returns per-mode coefficient columns.
pub fn accumulate<S, F>(spec: &McSpec, m: usize, sampler: S, eval: F) -> Vec<Sums>
where
    S: Fn(u64, usize) -> Vec<Vec<C64>> + Sync,
    F: Fn(&Field, &mut [f64]) -> f64 + Sync,
{
    let blocks = spec.samples.div_ceil(CHUNK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * CHUNK;
            let count = CHUNK.min(spec.samples - first);
            let cols = sampler(first as u64, count);
            let mut sums = Sums::new(m);
            let mut field = Field::zeros(cols.len());
            let mut f = vec![0.0; m];
            for s in 0..count {
                for (a, col) in field.alpha.iter_mut().zip(&cols) {
                    *a = col[s];
                }
                let w = eval(&field, &mut f);
                sums.n += 1;
                sums.sw += w;
                sums.sww += w * w;
                for j in 0..m {
                    let y = w * f[j];
                    sums.sy[j] += y;
                    sums.syy[j] += y * y;
                    sums.syw[j] += y * w;
                }
            }
            sums
        })
        .collect()
}

fn total(blocks: &[Sums]) -> Sums {
    let mut t = Sums::new(blocks.first().map_or(0, |b| b.sy.len()));
    for b in blocks {
        t.merge(b);
    }
    t
}

/// Self-normalized estimates Σ w f_j / Σ w with delta-method errors.
pub fn ratio_estimates(blocks: &[Sums], spec: &McSpec) -> Vec<McEstimate> {
    let t = total(blocks);
    let n = t.n as f64;
    let nb = blocks.len() as f64;
    (0..t.sy.len())
        .map(|j| {
            let r = t.sy[j] / t.sw;
            let resid = (t.syy[j] - 2.0 * r * t.syw[j] + r * r * t.sww).max(0.0);
            let wbar = t.sw / n;
            let stderr = (resid / (n * (n - 1.0))).sqrt() / wbar;
            let loo: Vec<f64> = blocks.iter().map(|b| (t.sy[j] - b.sy[j]) / (t.sw - b.sw)).collect();
            let jk = jackknife_spread(&loo, nb);
            McEstimate { mean: r, stderr, n_samples: t.n, seed: spec.seed, jackknife_stderr: jk }
        })
        .collect()
}

/// Plain means of w and of each y_j = w f_j, with CLT errors.
pub fn plain_estimates(blocks: &[Sums], spec: &McSpec) -> (McEstimate, Vec<McEstimate>) {
    let t = total(blocks);
    let n = t.n as f64;
    let nb = blocks.len() as f64;
    let plain = |s: f64, ss: f64, per_block: Vec<f64>| {
        let mean = s / n;
        let var = ((ss - s * s / n) / (n - 1.0)).max(0.0);
        let loo: Vec<f64> = blocks.iter().zip(per_block).map(|(b, x)| (s - x) / (n - b.n as f64)).collect();
        McEstimate {
            mean,
            stderr: (var / n).sqrt(),
            n_samples: t.n,
            seed: spec.seed,
            jackknife_stderr: jackknife_spread(&loo, nb),
        }
    };
    let w = plain(t.sw, t.sww, blocks.iter().map(|b| b.sw).collect());
    let ys = (0..t.sy.len())
        .map(|j| plain(t.sy[j], t.syy[j], blocks.iter().map(|b| b.sy[j]).collect()))
        .collect();
    (w, ys)
}

fn jackknife_spread(loo: &[f64], nb: f64) -> f64 {
    if loo.len() < 2 {
        return f64::NAN;
    }
    let mean = loo.iter().sum::<f64>() / nb;
    ((nb - 1.0) / nb * loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>()).sqrt()
}

fn gaussian_sampler<'a>(modes: &'a ModeSet, seed: u64) -> impl Fn(u64, usize) -> Vec<Vec<C64>> + Sync + 'a {
    move |first, count| sample_chunk(modes, seed, first, count)
}

/// z_P = E_{μ_0}[e^{−D_P}].
pub fn mc_partition(modes: &ModeSet, interaction: Interaction, spec: &McSpec) -> Result<McEstimate> {
    spec.validate()?;
    let dp = Hartree::new(modes, interaction);
    let blocks = accumulate(spec, 0, gaussian_sampler(modes, spec.seed), |u, _| (-dp.eval(u)).exp());
    Ok(plain_estimates(&blocks, spec).0)
}

/// Estimates of ∫ f_j dν_P for several observables at once.
pub fn mc_observables(
    modes: &ModeSet,
    interaction: Interaction,
    spec: &McSpec,
    m: usize,
    f: impl Fn(&Field, &mut [f64]) + Sync,
) -> Result<Vec<McEstimate>> {
    spec.validate()?;
    let dp = Hartree::new(modes, interaction);
    let blocks = accumulate(spec, m, gaussian_sampler(modes, spec.seed), |u, out| {
        f(u, out);
        (-dp.eval(u)).exp()
    });
    Ok(ratio_estimates(&blocks, spec))
}

/// ∫ |⟨φ, u⟩|^{2n} dν_P.
pub fn mc_moment(modes: &ModeSet, interaction: Interaction, phi: &Field, n: u32, spec: &McSpec) -> Result<McEstimate> {
    if phi.alpha.len() != modes.len() {
        return Err(Error::Shape("test vector must live on the mode set".into()));
    }
    Ok(mc_observables(modes, interaction, spec, 1, |u, out| out[0] = phi.inner(u).norm_sqr().powi(n as i32))?[0])
}

/// Entries of the matrix ∫ |v(u)⟩⟨v(u)| dν_P with standard errors.
#[derive(Clone, Debug)]
pub struct CorrelationEstimate {
    pub order: usize,
    pub matrix: DMatrix<C64>,
    pub stderr: DMatrix<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

/// Coordinates of u^{⊗k} in the basis used for quantum reduced densities:
/// the mode basis for k = 1, the orthonormal symmetric pair basis for k = 2.
pub fn tensor_power(u: &Field, k: usize) -> Vec<C64> {
    match k {
        1 => u.alpha.clone(),
        _ => sym_pairs(u.alpha.len())
            .into_iter()
            .map(|(i, j)| {
                let g = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                u.alpha[i] * u.alpha[j] * g
            })
            .collect(),
    }
}

/// γ^{(k)}_{ν_P} = ∫ |u^{⊗k}⟩⟨u^{⊗k}| dν_P for k ∈ {1, 2}; Hermitian by construction.
pub fn mc_correlation(modes: &ModeSet, interaction: Interaction, k: usize, spec: &McSpec) -> Result<CorrelationEstimate> {
    if !(k == 1 || k == 2) {
        return Err(Error::UnsupportedOrder(k));
    }
    let d = if k == 1 { modes.len() } else { modes.len() * (modes.len() + 1) / 2 };
    let upper: Vec<(usize, usize)> = (0..d).flat_map(|a| (a..d).map(move |b| (a, b))).collect();
    let est = mc_observables(modes, interaction, spec, 2 * upper.len(), |u, out| {
        let v = tensor_power(u, k);
        for (i, &(a, b)) in upper.iter().enumerate() {
            let z = v[a] * v[b].conj();
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
    })?;
    let mut matrix = DMatrix::zeros(d, d);
    let mut stderr = DMatrix::zeros(d, d);
    for (i, &(a, b)) in upper.iter().enumerate() {
        let (re, im) = (est[2 * i], est[2 * i + 1]);
        let z = if a == b { C64::new(re.mean, 0.0) } else { C64::new(re.mean, im.mean) };
        let e = if a == b { re.stderr } else { re.stderr.hypot(im.stderr) };
        matrix[(a, b)] = z;
        matrix[(b, a)] = z.conj();
        stderr[(a, b)] = e;
        stderr[(b, a)] = e;
    }
    Ok(CorrelationEstimate { order: k, matrix, stderr, n_samples: spec.samples, seed: spec.seed })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CutoffRow {
    pub cutoff_sq: f64,
    pub n_modes: usize,
    pub z: McEstimate,
    /// Paired estimate of z(this) − z(previous), absent on the first row.
    pub diff: Option<McEstimate>,
}

/// z_P along ascending cutoffs with common random numbers: all sets are read
/// off the same Gaussian draws on the largest set.
pub fn cutoff_stability(interaction: Interaction, cutoffs: &[f64], spec: &McSpec) -> Result<Vec<CutoffRow>> {
    spec.validate()?;
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParam("cutoffs must be non-empty and strictly ascending".into()));
    }
    let big = mode_set(*cutoffs.last().unwrap());
    let sets: Vec<ModeSet> = cutoffs.iter().map(|&c| mode_set(c)).collect();
    let maps: Vec<Vec<usize>> = sets.iter().map(|s| s.iter().map(|p| big.position(p).unwrap()).collect()).collect();
    let dps: Vec<Hartree> = sets.iter().map(|s| Hartree::new(s, interaction)).collect();
    let m = 2 * sets.len();
    let blocks = accumulate(spec, m, gaussian_sampler(&big, spec.seed), |u, out| {
        let mut prev = 0.0;
        for (j, (dp, map)) in dps.iter().zip(&maps).enumerate() {
            let sub = Field { alpha: map.iter().map(|&i| u.alpha[i]).collect() };
            let w = (-dp.eval(&sub)).exp();
            out[2 * j] = w;
            out[2 * j + 1] = if j == 0 { 0.0 } else { w - prev };
            prev = w;
        }
        1.0
    });
    let (_, ys) = plain_estimates(&blocks, spec);
    Ok(sets
        .iter()
        .enumerate()
        .map(|(j, s)| CutoffRow {
            cutoff_sq: cutoffs[j],
            n_modes: s.len(),
            z: ys[2 * j],
            diff: (j > 0).then(|| ys[2 * j + 1]),
        })
        .collect())
}
