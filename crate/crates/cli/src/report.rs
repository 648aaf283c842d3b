//! Merges run records from a directory tree; verdicts are re-derived from the
//! stored results, never from new physics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::output::Table;
use crate::record::{all_pass, RunRecord, RECORD_SUFFIX};
use crate::{recompute_verdicts, CliError, RunConfig, Verdict};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportEntry {
    pub source: String,
    pub command: String,
    pub artifact_version: String,
    pub seeds: Vec<u64>,
    pub wall_clock_seconds: f64,
    pub verdicts: Vec<Verdict>,
    /// Whether the re-derived verdicts equal the ones stored in the record.
    pub stored_verdicts_agree: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigGroup {
    pub sources: Vec<String>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub records: Vec<ReportEntry>,
    /// Distinct configurations (output_dir ignored); more than one is flagged.
    pub configs: Vec<ConfigGroup>,
    pub conflicting_configs: bool,
    pub all_pass: bool,
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(dir, err)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(RECORD_SUFFIX)) {
            out.push(p);
        }
    }
    Ok(())
}

pub fn build_report(run_dir: &Path) -> Result<Report, CliError> {
    let mut paths = Vec::new();
    collect(run_dir, &mut paths)?;
    let mut records = Vec::new();
    let mut configs: Vec<ConfigGroup> = Vec::new();
    for path in paths {
        let rec = RunRecord::read(&path)?;
        let source = path.strip_prefix(run_dir).unwrap_or(&path).display().to_string();
        let verdicts = recompute_verdicts(&rec.command, &rec.results, &rec.config)?;
        let mut cfg = rec.config.clone();
        cfg.output_dir = PathBuf::new();
        match configs.iter_mut().find(|g| g.config == cfg) {
            Some(g) => g.sources.push(source.clone()),
            None => configs.push(ConfigGroup { sources: vec![source.clone()], config: cfg }),
        }
        records.push(ReportEntry {
            source,
            command: rec.command,
            artifact_version: rec.artifact_version,
            seeds: rec.seeds,
            wall_clock_seconds: rec.wall_clock_seconds,
            stored_verdicts_agree: verdicts == rec.verdicts,
            verdicts,
        });
    }
    let all = records.iter().all(|r| all_pass(&r.verdicts));
    Ok(Report { schema_version: SCHEMA_VERSION, conflicting_configs: configs.len() > 1, records, configs, all_pass: all })
}

/// Builds the report and writes `report.json` and `report.csv` into `out`.
pub fn write_report(run_dir: &Path, out: &Path) -> Result<Report, CliError> {
    let report = build_report(run_dir)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    let mut t = Table::new(&["source", "command", "config_group", "verdict", "pass", "gating", "detail"]);
    for r in &report.records {
        let group = report.configs.iter().position(|g| g.sources.contains(&r.source)).unwrap_or(0);
        for v in &r.verdicts {
            t.push(vec![
                r.source.clone(),
                r.command.clone(),
                group.to_string(),
                v.name.clone(),
                v.pass.to_string(),
                v.gating.to_string(),
                v.detail.clone(),
            ]);
        }
    }
    t.write(out, "report.csv")?;
    Ok(report)
}
