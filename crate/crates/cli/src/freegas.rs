//! Free-gas scaling checks.

use std::f64::consts::PI;

use bosefield::freegas::{free_number, free_number_cumulants, Region};
use bosefield::CertifiedValue;
use serde::{Deserialize, Serialize};

use crate::output::{num, Table};
use crate::{CliError, RunConfig, Verdict};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumberScaling {
    pub lambda: f64,
    pub n0: CertifiedValue,
    /// λN₀/|log λ|.
    pub ratio: f64,
    /// Same ratio with the lattice sum replaced by ∫ d²p/(e^{λ(p²+1)}−1).
    pub integral_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarianceRow {
    pub lambda: f64,
    pub variance: CertifiedValue,
    pub scaled: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailRow {
    pub lambda: f64,
    pub cutoff_sq: f64,
    pub n0_tail: CertifiedValue,
    pub scaled: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreegasResults {
    pub number: NumberScaling,
    pub variance: Vec<VarianceRow>,
    pub tail: Vec<TailRow>,
}

pub fn freegas(cfg: &RunConfig) -> Result<FreegasResults, CliError> {
    let f = &cfg.freegas;
    let lam = f.n0_lambda;
    let n0 = free_number(lam, Region::All)?;
    let integral = PI / lam * -(-(-lam).exp()).ln_1p();
    let number = NumberScaling {
        lambda: lam,
        n0,
        ratio: lam * n0.value / lam.ln().abs(),
        integral_ratio: lam * integral / lam.ln().abs(),
    };
    let variance = f
        .variance_lambdas
        .iter()
        .map(|&l| {
            let v = free_number_cumulants(l, Region::All)?[1];
            Ok(VarianceRow { lambda: l, variance: v, scaled: l * l * v.value })
        })
        .collect::<Result<_, CliError>>()?;
    let tail = f
        .tail_lambdas
        .iter()
        .map(|&l| {
            let cutoff_sq = f.tail_product / l;
            let n = free_number(l, Region::Above(cutoff_sq))?;
            Ok(TailRow { lambda: l, cutoff_sq, n0_tail: n, scaled: l * (n.value + n.tail_bound) })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(FreegasResults { number, variance, tail })
}

pub fn verdicts(r: &FreegasResults, cfg: &RunConfig) -> Vec<Verdict> {
    let f = &cfg.freegas;
    let n = &r.number;
    let mut v = vec![Verdict::new(
        "n0_log_scaling",
        n.ratio >= 0.8 * PI && n.ratio <= 1.2 * PI,
        format!("lambda N0/|log lambda| = {} = {} pi (integral oracle {})", num(n.ratio), num(n.ratio / PI), num(n.integral_ratio)),
    )];
    let scaled: Vec<f64> = r.variance.iter().map(|x| x.scaled).collect();
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.push(Verdict::new(
        "variance_bounded",
        !scaled.is_empty() && hi / lo - 1.0 < f.variance_spread,
        format!("lambda^2 Var(N) in [{}, {}], relative variation {}", num(lo), num(hi), num(hi / lo - 1.0)),
    ));
    let worst = r.tail.iter().map(|t| t.scaled).fold(0.0, f64::max);
    v.push(Verdict::new(
        "tail_small",
        worst < f.tail_bound,
        format!("max lambda N0(h > {}/lambda) = {} (limit {})", num(f.tail_product), num(worst), num(f.tail_bound)),
    ));
    v
}

pub fn tables(r: &FreegasResults) -> Vec<(&'static str, Table)> {
    let mut t = Table::new(&["quantity", "lambda", "cutoff_sq", "value", "tail_bound", "scaled"]);
    let n = &r.number;
    t.push(vec!["n0".into(), num(n.lambda), String::new(), num(n.n0.value), num(n.n0.tail_bound), num(n.ratio)]);
    t.push(vec!["n0_integral".into(), num(n.lambda), String::new(), String::new(), String::new(), num(n.integral_ratio)]);
    for x in &r.variance {
        t.push(vec!["variance".into(), num(x.lambda), String::new(), num(x.variance.value), num(x.variance.tail_bound), num(x.scaled)]);
    }
    for x in &r.tail {
        t.push(vec!["n0_tail".into(), num(x.lambda), num(x.cutoff_sq), num(x.n0_tail.value), num(x.n0_tail.tail_bound), num(x.scaled)]);
    }
    vec![("freegas.csv", t)]
}
