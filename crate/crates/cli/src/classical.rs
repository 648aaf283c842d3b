//! Classical partition function across cutoffs with common random numbers.

use bosefield::classical::{cutoff_stability, CutoffRow, McSpec};
use serde::{Deserialize, Serialize};

use crate::output::{num, opt, Table};
use crate::{CliError, RunConfig, Verdict};

/// Largest accepted stderr on every z and Δz.
pub const STDERR_LIMIT: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutoffResults {
    pub rows: Vec<CutoffRow>,
}

pub fn classical_cutoff(cfg: &RunConfig) -> Result<CutoffResults, CliError> {
    let spec = McSpec { samples: cfg.mc_samples, seed: cfg.seed };
    Ok(CutoffResults { rows: cutoff_stability(cfg.interaction(), &cfg.classical_cutoffs, &spec)? })
}

pub fn verdicts(r: &CutoffResults) -> Vec<Verdict> {
    let in_range = r.rows.iter().all(|x| x.z.mean > 0.0 && x.z.mean <= 1.0);
    let mut v = vec![Verdict::new("z_in_unit_interval", in_range, "every z estimate in (0, 1]")];
    let worst = r
        .rows
        .iter()
        .flat_map(|x| std::iter::once(x.z.stderr).chain(x.diff.map(|d| d.stderr)))
        .fold(0.0, f64::max);
    v.push(Verdict::new(
        "stderr_matched",
        worst <= STDERR_LIMIT,
        format!("max stderr {} (limit {})", num(worst), num(STDERR_LIMIT)),
    ));
    let diffs: Vec<f64> = r.rows.iter().filter_map(|x| x.diff).map(|d| d.mean.abs()).collect();
    if diffs.len() >= 2 {
        let shown: Vec<String> = diffs.iter().map(|d| num(*d)).collect();
        v.push(Verdict::new("diff_decreasing", diffs.windows(2).all(|w| w[1] < w[0]), format!("|dz| = {}", shown.join(", "))));
    }
    v
}

pub fn tables(r: &CutoffResults) -> Vec<(&'static str, Table)> {
    let mut t = Table::new(&["cutoff_sq", "n_modes", "z", "z_stderr", "diff", "diff_stderr", "n_samples", "seed"]);
    for x in &r.rows {
        t.push(vec![
            num(x.cutoff_sq),
            x.n_modes.to_string(),
            num(x.z.mean),
            num(x.z.stderr),
            opt(x.diff.map(|d| d.mean)),
            opt(x.diff.map(|d| d.stderr)),
            x.z.n_samples.to_string(),
            x.z.seed.to_string(),
        ]);
    }
    vec![("classical_cutoff.csv", t)]
}
