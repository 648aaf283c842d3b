//! Quantum-to-classical convergence table and its verdicts.

use bosefield::bridge::{convergence_report, ClassicalReference, ConvergenceOptions, ConvergenceRow};
use bosefield::classical::{CorrelationEstimate, McEstimate, McSpec};
use bosefield::gibbs::{product_trial_hf0, sym_pairs, ProductTrialHf};
use bosefield::{mode_set, ModeSet};
use serde::{Deserialize, Serialize};

use crate::output::{mode, num, opt, Table};
use crate::{CliError, RunConfig, Verdict};

/// Free-state truncation target on the outer modes of the product trial state.
const Q_DEFECT_TARGET: f64 = 1e-15;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub order: usize,
    pub row: String,
    pub col: String,
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalSummary {
    pub z: McEstimate,
    pub neg_log_z: f64,
    pub neg_log_z_stderr: f64,
    pub correlations: Vec<CorrelationEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductRow {
    pub lambda: f64,
    pub trial: Option<ProductTrialHf>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergeResults {
    pub classical: ClassicalSummary,
    pub rows: Vec<ConvergenceRow>,
    pub product: Vec<ProductRow>,
}

/// Row and column labels of the k-body matrices: modes for k = 1, symmetric pairs for k = 2.
fn labels(modes: &ModeSet, order: usize) -> Vec<String> {
    match order {
        1 => modes.iter().map(mode).collect(),
        _ => sym_pairs(modes.len())
            .into_iter()
            .map(|(i, j)| format!("{}|{}", mode(modes.mode(i)), mode(modes.mode(j))))
            .collect(),
    }
}

fn entries(modes: &ModeSet, c: &CorrelationEstimate) -> Vec<CorrelationEntry> {
    let l = labels(modes, c.order);
    let mut out = Vec::new();
    for i in 0..c.matrix.nrows() {
        for j in 0..c.matrix.ncols() {
            let z = c.matrix[(i, j)];
            out.push(CorrelationEntry {
                order: c.order,
                row: l[i].clone(),
                col: l[j].clone(),
                re: z.re,
                im: z.im,
                stderr: c.stderr[(i, j)],
            });
        }
    }
    out
}

pub fn options(cfg: &RunConfig) -> ConvergenceOptions {
    let mut opts = ConvergenceOptions::new(cfg.interaction());
    opts.inner_cutoff_sq = cfg.inner_cutoff_sq;
    opts.cap = cfg.cap.fixed();
    opts.max_cap = cfg.max_cap;
    opts.free_energy.threshold = cfg.tolerances.cap_defect;
    opts.free_energy.basis_limit = cfg.basis_limit;
    opts
}

pub fn converge(cfg: &RunConfig) -> Result<ConvergeResults, CliError> {
    let modes = mode_set(cfg.cutoff_sq);
    let inter = cfg.interaction();
    let spec = McSpec { samples: cfg.mc_samples, seed: cfg.seed };
    let reference = ClassicalReference::compute(&modes, inter, &spec)?;
    let opts = options(cfg);
    let rows = convergence_report(&modes, inter, &cfg.lambda_list, &opts, &reference);
    let product = cfg
        .lambda_list
        .iter()
        .map(|&lambda| match product_trial_hf0(&modes, cfg.inner_cutoff_sq, inter, lambda, &opts.free_energy, Q_DEFECT_TARGET) {
            Ok(t) => ProductRow { lambda, trial: Some(t), status: "ok".into() },
            Err(e) => ProductRow { lambda, trial: None, status: e.to_string() },
        })
        .collect();
    let mut correlations = entries(&modes, &reference.gamma1);
    correlations.extend(entries(&modes, &reference.gamma2));
    Ok(ConvergeResults {
        classical: ClassicalSummary {
            z: reference.z,
            neg_log_z: reference.neg_log_z(),
            neg_log_z_stderr: reference.neg_log_z_stderr(),
            correlations,
        },
        rows,
        product,
    })
}

/// Strictly decreasing sequence check; `None` entries fail it.
fn decreasing(name: &str, lambdas: &[f64], values: &[Option<f64>]) -> Verdict {
    let missing: Vec<String> = lambdas.iter().zip(values).filter(|(_, v)| v.is_none()).map(|(l, _)| num(*l)).collect();
    if !missing.is_empty() {
        return Verdict::new(name, false, format!("no value at lambda = {}", missing.join(", ")));
    }
    let v: Vec<f64> = values.iter().map(|x| x.unwrap()).collect();
    let pass = v.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = lambdas.iter().zip(&v).map(|(l, x)| format!("{}: {}", num(*l), num(*x))).collect();
    Verdict::new(name, pass, shown.join(", "))
}

fn final_below(name: &str, row: &ConvergenceRow, value: Option<f64>, limit: f64, stderr: f64) -> Verdict {
    let bound = limit + 3.0 * stderr;
    match value {
        Some(x) => Verdict::new(
            name,
            x.abs() <= bound,
            format!("|{}| at lambda = {} vs {} + 3 x {}", num(x), num(row.lambda), num(limit), num(stderr)),
        ),
        None => Verdict::new(name, false, format!("no value at lambda = {}: {}", num(row.lambda), row.status)),
    }
}

pub fn verdicts(r: &ConvergeResults, cfg: &RunConfig) -> Vec<Verdict> {
    let t = &cfg.tolerances;
    let rows = &r.rows;
    let lambdas: Vec<f64> = rows.iter().map(|x| x.lambda).collect();
    let mut v = vec![Verdict::new(
        "classical_stderr",
        r.classical.neg_log_z_stderr < 1e-3,
        format!("-log z = {} +- {}", num(r.classical.neg_log_z), num(r.classical.neg_log_z_stderr)),
    )];
    // The gap trend starts after the first entry, so it needs three rows.
    if rows.len() >= 3 {
        let gaps: Vec<Option<f64>> = rows[1..].iter().map(|x| x.gap.map(f64::abs)).collect();
        v.push(decreasing("gap_decreasing", &lambdas[1..], &gaps));
    }
    if rows.len() >= 2 {
        v.push(decreasing("hs_k1_decreasing", &lambdas, &rows.iter().map(|x| x.hs_k1).collect::<Vec<_>>()));
        v.push(decreasing("hs_k2_decreasing", &lambdas, &rows.iter().map(|x| x.hs_k2).collect::<Vec<_>>()));
        v.push(decreasing("hf0_decreasing", &lambdas, &rows.iter().map(|x| x.hf0).collect::<Vec<_>>()));
    }
    if let Some(last) = rows.last() {
        v.push(final_below("gap_final", last, last.gap, t.gap, last.neg_log_z_stderr));
        v.push(final_below("hs_k1_final", last, last.hs_k1, t.hs_k1, last.hs_k1_stderr));
        v.push(final_below("hs_k2_final", last, last.hs_k2, t.hs_k2, last.hs_k2_stderr));
    }
    let bad: Vec<String> = r
        .product
        .iter()
        .filter(|p| p.trial.map_or(true, |x| !(x.cross.abs() <= t.cross_term)))
        .map(|p| format!("lambda = {}: {}", num(p.lambda), p.trial.map_or(p.status.clone(), |x| num(x.cross))))
        .collect();
    let worst = r.product.iter().filter_map(|p| p.trial).map(|x| x.cross.abs()).fold(0.0, f64::max);
    v.push(Verdict::new(
        "product_cross_term",
        bad.is_empty(),
        if bad.is_empty() { format!("max |cross| = {}", num(worst)) } else { bad.join("; ") },
    ));
    v
}

pub fn tables(r: &ConvergeResults) -> Vec<(&'static str, Table)> {
    let mut conv = Table::new(&[
        "lambda", "cap", "dim", "relative_defect", "f", "neg_log_z", "neg_log_z_stderr", "gap", "hs_k1", "hs_k1_stderr",
        "hs_k2", "hs_k2_stderr", "hf0", "hf_neq0", "fluct", "status",
    ]);
    let int = |x: Option<usize>| x.map(|c| c.to_string()).unwrap_or_default();
    for x in &r.rows {
        conv.push(vec![
            num(x.lambda),
            int(x.cap),
            int(x.dim),
            opt(x.relative_defect),
            opt(x.f),
            num(x.neg_log_z),
            num(x.neg_log_z_stderr),
            opt(x.gap),
            opt(x.hs_k1),
            num(x.hs_k1_stderr),
            opt(x.hs_k2),
            num(x.hs_k2_stderr),
            opt(x.hf0),
            opt(x.hf_neq0),
            opt(x.fluct),
            x.status.clone(),
        ]);
    }
    let mut prod = Table::new(&["lambda", "hf0", "cross", "square", "cap_p", "cap_q", "relative_defect_p", "defect_q", "status"]);
    for p in &r.product {
        let t = p.trial;
        prod.push(vec![
            num(p.lambda),
            opt(t.map(|x| x.hf0)),
            opt(t.map(|x| x.cross)),
            opt(t.map(|x| x.square)),
            int(t.map(|x| x.cap_p)),
            int(t.map(|x| x.cap_q)),
            opt(t.map(|x| x.relative_defect_p)),
            opt(t.map(|x| x.defect_q)),
            p.status.clone(),
        ]);
    }
    let mut corr = Table::new(&["k", "row_mode", "col_mode", "re", "im", "stderr"]);
    for e in &r.classical.correlations {
        corr.push(vec![e.order.to_string(), e.row.clone(), e.col.clone(), num(e.re), num(e.im), num(e.stderr)]);
    }
    let z = &r.classical.z;
    let mut cl = Table::new(&["z", "z_stderr", "z_jackknife_stderr", "neg_log_z", "neg_log_z_stderr", "n_samples", "seed"]);
    cl.push(vec![
        num(z.mean),
        num(z.stderr),
        num(z.jackknife_stderr),
        num(r.classical.neg_log_z),
        num(r.classical.neg_log_z_stderr),
        z.n_samples.to_string(),
        z.seed.to_string(),
    ]);
    vec![("convergence.csv", conv), ("product_trial.csv", prod), ("classical_correlations.csv", corr), ("classical_z.csv", cl)]
}
