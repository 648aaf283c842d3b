use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Particle cap: certified per λ, or fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapSetting {
    Fixed(usize),
    Named(CapKeyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapKeyword {
    Auto,
}

impl CapSetting {
    pub const AUTO: CapSetting = CapSetting::Named(CapKeyword::Auto);

    pub fn fixed(&self) -> Option<usize> {
        match *self {
            CapSetting::Fixed(c) => Some(c),
            CapSetting::Named(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative cap defect that certifies a cap.
    pub cap_defect: f64,
    /// Entrywise residual for exact identities.
    pub identity: f64,
    pub dropped_mass: f64,
    /// Largest accepted max/min ratio in the lattice-sum sweeps.
    pub sweep_spread: f64,
    /// Gap and hs thresholds at the smallest λ.
    pub gap: f64,
    pub hs_k1: f64,
    pub hs_k2: f64,
    pub cross_term: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cap_defect: 1e-8,
            identity: 1e-10,
            dropped_mass: 1e-8,
            sweep_spread: 10.0,
            gap: 0.05,
            hs_k1: 0.03,
            hs_k2: 0.06,
            cross_term: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub grid: usize,
    pub betas: Vec<f64>,
    pub fourier_radius: usize,
    pub heat_tol: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { grid: 32, betas: vec![1.6, 2.0], fourier_radius: 200, heat_tol: 1e-11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SumsConfig {
    pub k_grid: Vec<i32>,
    pub log_k_grid: Vec<i32>,
    pub l_grid: Vec<f64>,
    pub ell_grid: Vec<i32>,
    pub s: f64,
    pub s1: f64,
    pub s2: f64,
}

impl Default for SumsConfig {
    fn default() -> Self {
        use bosefield::lattice::sweeps::{ELL_GRID, K_GRID, K_GRID_EXTENDED, L_GRID};
        SumsConfig {
            k_grid: K_GRID.to_vec(),
            log_k_grid: K_GRID_EXTENDED.to_vec(),
            l_grid: L_GRID.to_vec(),
            ell_grid: ELL_GRID.to_vec(),
            s: 0.75,
            s1: 0.6,
            s2: 0.6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreegasConfig {
    pub n0_lambda: f64,
    pub variance_lambdas: Vec<f64>,
    pub tail_lambdas: Vec<f64>,
    /// λΛ₁² for the tail region h > Λ₁².
    pub tail_product: f64,
    pub variance_spread: f64,
    pub tail_bound: f64,
}

impl Default for FreegasConfig {
    fn default() -> Self {
        FreegasConfig {
            n0_lambda: 1e-4,
            variance_lambdas: vec![0.1, 0.01, 0.001],
            tail_lambdas: vec![0.1, 0.01, 0.001],
            tail_product: 25.0,
            variance_spread: 0.2,
            tail_bound: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub cap: usize,
    pub lambda: f64,
    pub wick_lambda: f64,
    pub wick_cap: usize,
    pub wick_t: Vec<f64>,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig {
            cap: 4,
            lambda: 1.0,
            wick_lambda: 2.0,
            wick_cap: 20,
            wick_t: vec![0.0, 0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub beta: f64,
    pub cutoff_sq: f64,
    pub inner_cutoff_sq: f64,
    pub cap: CapSetting,
    pub lambda_list: Vec<f64>,
    pub mc_samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub basis_limit: usize,
    pub max_cap: usize,
    pub classical_cutoffs: Vec<f64>,
    /// Name of an identity whose left-hand side gets corrupted; test mode only.
    pub inject_fault: Option<String>,
    pub tolerances: Tolerances,
    pub kernel: KernelConfig,
    pub sums: SumsConfig,
    pub freegas: FreegasConfig,
    pub identities: IdentitiesConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            beta: 2.0,
            cutoff_sq: 2.0,
            inner_cutoff_sq: 1.5,
            cap: CapSetting::AUTO,
            lambda_list: vec![0.5, 0.2, 0.1, 0.05, 0.02],
            mc_samples: 1_000_000,
            seed: 20_240_601,
            output_dir: PathBuf::from("out"),
            basis_limit: 1_000_000,
            max_cap: 4096,
            classical_cutoffs: vec![2.0, 5.0, 10.0],
            inject_fault: None,
            tolerances: Tolerances::default(),
            kernel: KernelConfig::default(),
            sums: SumsConfig::default(),
            freegas: FreegasConfig::default(),
            identities: IdentitiesConfig::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn beta_ok(b: f64) -> bool {
    b > 1.5 && b <= 2.0
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("schema_version {} is not {SCHEMA_VERSION}", self.schema_version)));
        }
        if !beta_ok(self.beta) {
            return Err(bad(format!("beta = {} outside the implemented range (1.5, 2]", self.beta)));
        }
        if let Some(b) = self.kernel.betas.iter().find(|&&b| !beta_ok(b)) {
            return Err(bad(format!("kernel beta = {b} outside (1.5, 2]")));
        }
        if !(self.cutoff_sq >= 1.0) {
            return Err(bad(format!("cutoff_sq = {} must be >= 1", self.cutoff_sq)));
        }
        if !(self.inner_cutoff_sq >= 1.0 && self.inner_cutoff_sq < self.cutoff_sq) {
            return Err(bad(format!("inner_cutoff_sq = {} must lie in [1, cutoff_sq)", self.inner_cutoff_sq)));
        }
        if self.lambda_list.is_empty() || self.lambda_list.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(bad("lambda_list must be non-empty with positive entries"));
        }
        if self.lambda_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("lambda_list must be strictly descending"));
        }
        if self.mc_samples < 1000 {
            return Err(bad(format!("mc_samples = {} is below 1000", self.mc_samples)));
        }
        if self.classical_cutoffs.is_empty() || self.classical_cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("classical_cutoffs must be non-empty and strictly ascending"));
        }
        if self.classical_cutoffs[0] < 1.0 {
            return Err(bad("classical_cutoffs must be >= 1"));
        }
        if self.kernel.grid < 8 {
            return Err(bad("kernel.grid must be >= 8"));
        }
        let s = &self.sums;
        if !(s.s > 0.5 && s.s < 1.0) {
            return Err(bad("sums.s must lie in (1/2, 1)"));
        }
        if !(s.s1 > 0.0 && s.s1 <= s.s2 && s.s2 < 1.0) {
            return Err(bad("sums needs 0 < s1 <= s2 < 1"));
        }
        if s.k_grid.is_empty() || s.log_k_grid.is_empty() || s.l_grid.is_empty() || s.ell_grid.is_empty() {
            return Err(bad("sweep grids must be non-empty"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("cap_defect", t.cap_defect),
            ("identity", t.identity),
            ("dropped_mass", t.dropped_mass),
            ("sweep_spread", t.sweep_spread),
            ("gap", t.gap),
            ("hs_k1", t.hs_k1),
            ("hs_k2", t.hs_k2),
            ("cross_term", t.cross_term),
        ] {
            if !(v > 0.0) {
                return Err(bad(format!("tolerances.{name} must be positive")));
            }
        }
        if self.identities.wick_t.iter().any(|t| t.abs() > 1.0) {
            return Err(bad("identities.wick_t entries must satisfy |t| <= 1"));
        }
        if let Some(name) = &self.inject_fault {
            if !crate::identities::IDENTITY_NAMES.contains(&name.as_str()) {
                return Err(bad(format!(
                    "inject_fault = {name:?} is not one of {:?}",
                    crate::identities::IDENTITY_NAMES
                )));
            }
        }
        Ok(())
    }

    pub fn interaction(&self) -> bosefield::Interaction {
        bosefield::Interaction::Bessel(bosefield::KernelParams::new(self.beta).expect("validated beta"))
    }
}
