use std::path::PathBuf;
use std::process::ExitCode;

use bosefield_cli::{execute, report, verdict_exit_code, CliError, Command, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bosefield", version, about = "Quantum and classical Bose gas experiments on a small momentum lattice")]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// RNG seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Kernel positivity, two-route agreement and lattice-sum tables.
    KernelCheck,
    /// Lattice-sum bound-ratio sweeps.
    SumsCheck,
    /// Free-gas scaling of the particle number, its variance and tails.
    Freegas,
    /// Exact operator identities on the truncated Fock space.
    Identities,
    /// Free energy and reduced densities against the classical limit.
    Converge,
    /// Classical partition function across cutoffs.
    ClassicalCutoff,
    /// Merge run records found under RUN_DIR.
    Report { run_dir: PathBuf },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cmd = match cli.command {
        Sub::KernelCheck => Command::KernelCheck,
        Sub::SumsCheck => Command::SumsCheck,
        Sub::Freegas => Command::Freegas,
        Sub::Identities => Command::Identities,
        Sub::Converge => Command::Converge,
        Sub::ClassicalCutoff => Command::ClassicalCutoff,
        Sub::Report { run_dir } => {
            let out = cli.out.unwrap_or_else(|| run_dir.clone());
            let r = report::write_report(&run_dir, &out)?;
            println!("report: {} records, all gating verdicts pass: {}", r.records.len(), r.all_pass);
            if r.conflicting_configs {
                println!("warning: {} distinct configurations", r.configs.len());
            }
            return Ok(if r.all_pass { 0 } else { 2 });
        }
    };
    let record = execute(cmd, &cfg, &cfg.output_dir)?;
    for v in &record.verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let gate = if v.gating { "" } else { " (informational)" };
        println!("{tag} {}{gate}: {}", v.name, v.detail);
    }
    Ok(verdict_exit_code(&record.verdicts))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
