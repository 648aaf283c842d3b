//! Experiment runner: configuration, commands, CSV and JSON persistence.
//!
//! Every command writes its CSV tables and a `<command>.record.json` run
//! record into the output directory. Exit codes: 0 pass, 2 invariant failure,
//! 3 configuration or schema error, 4 compute or I/O error.

pub mod classical;
pub mod config;
pub mod converge;
pub mod freegas;
pub mod identities;
pub mod kernel;
pub mod output;
pub mod record;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{CapSetting, RunConfig};
pub use record::{RunRecord, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("record schema error: {0}")]
    Schema(String),
    #[error("compute error: {0}")]
    Compute(#[from] bosefield::Error),
    #[error("I/O error at {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 3,
            CliError::Compute(_) | CliError::Io { .. } => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    KernelCheck,
    SumsCheck,
    Freegas,
    Identities,
    Converge,
    ClassicalCutoff,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::KernelCheck,
        Command::SumsCheck,
        Command::Freegas,
        Command::Identities,
        Command::Converge,
        Command::ClassicalCutoff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::SumsCheck => "sums-check",
            Command::Freegas => "freegas",
            Command::Identities => "identities",
            Command::Converge => "converge",
            Command::ClassicalCutoff => "classical-cutoff",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Results, verdicts, tables and consumed seeds of one command.
pub struct Outcome {
    pub results: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<(&'static str, output::Table)>,
    pub seeds: Vec<u64>,
}

fn to_value<T: serde::Serialize>(t: &T) -> serde_json::Value {
    serde_json::to_value(t).expect("results serialize")
}

fn compute(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    Ok(match cmd {
        Command::KernelCheck => {
            let r = kernel::kernel_check(cfg)?;
            Outcome {
                verdicts: kernel::kernel_verdicts(&r, cfg),
                tables: kernel::kernel_tables(&r),
                results: to_value(&r),
                seeds: vec![],
            }
        }
        Command::SumsCheck => {
            let r = kernel::sums_check(cfg)?;
            Outcome {
                verdicts: kernel::sums_verdicts(&r, cfg),
                tables: kernel::sums_tables(&r),
                results: to_value(&r),
                seeds: vec![],
            }
        }
        Command::Freegas => {
            let r = freegas::freegas(cfg)?;
            Outcome { verdicts: freegas::verdicts(&r, cfg), tables: freegas::tables(&r), results: to_value(&r), seeds: vec![] }
        }
        Command::Identities => {
            let r = identities::identities(cfg)?;
            Outcome {
                verdicts: identities::verdicts(&r),
                tables: identities::tables(&r),
                results: to_value(&r),
                seeds: vec![],
            }
        }
        Command::Converge => {
            let r = converge::converge(cfg)?;
            Outcome {
                verdicts: converge::verdicts(&r, cfg),
                tables: converge::tables(&r),
                results: to_value(&r),
                seeds: vec![cfg.seed],
            }
        }
        Command::ClassicalCutoff => {
            let r = classical::classical_cutoff(cfg)?;
            Outcome {
                verdicts: classical::verdicts(&r),
                tables: classical::tables(&r),
                results: to_value(&r),
                seeds: vec![cfg.seed],
            }
        }
    })
}

/// Recomputes verdicts from stored results without touching the physics.
pub fn recompute_verdicts(command: &str, results: &serde_json::Value, cfg: &RunConfig) -> Result<Vec<Verdict>, CliError> {
    fn parse<T: serde::de::DeserializeOwned>(v: &serde_json::Value) -> Result<T, CliError> {
        serde_json::from_value(v.clone()).map_err(|e| CliError::Schema(e.to_string()))
    }
    let cmd = Command::from_name(command).ok_or_else(|| CliError::Schema(format!("unknown command {command:?}")))?;
    Ok(match cmd {
        Command::KernelCheck => kernel::kernel_verdicts(&parse(results)?, cfg),
        Command::SumsCheck => kernel::sums_verdicts(&parse(results)?, cfg),
        Command::Freegas => freegas::verdicts(&parse(results)?, cfg),
        Command::Identities => identities::verdicts(&parse(results)?),
        Command::Converge => converge::verdicts(&parse(results)?, cfg),
        Command::ClassicalCutoff => classical::verdicts(&parse(results)?),
    })
}

/// Runs a command, writing its tables and run record into `out`.
pub fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<RunRecord, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let start = Instant::now();
    let outcome = compute(cmd, cfg)?;
    let mut files = Vec::new();
    for (name, table) in &outcome.tables {
        table.write(out, name)?;
        files.push(name.to_string());
    }
    let record = RunRecord {
        schema_version: config::SCHEMA_VERSION,
        artifact_version: record::ARTIFACT_VERSION.to_string(),
        command: cmd.name().to_string(),
        config: cfg.clone(),
        results: outcome.results,
        verdicts: outcome.verdicts,
        seeds: outcome.seeds,
        files,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    record.write(out)?;
    Ok(record)
}

/// 0 when every gating verdict passes, 2 otherwise.
pub fn verdict_exit_code(verdicts: &[Verdict]) -> i32 {
    if record::all_pass(verdicts) {
        0
    } else {
        2
    }
}
