//! Config-driven reproduction experiments with pass/fail tolerances.
//!
//! Each experiment returns an [`ExperimentReport`] plus the CSV data behind it; nothing
//! touches the filesystem until [`write_outputs`].

mod cell_read;
mod hysteresis;
mod ir_drop;
mod leakage;
mod pipeline_speedup;
mod power;
mod transient;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{invalid, Result};
use crate::io::write_atomic;

pub use cell_read::cell_read;
pub use hysteresis::hysteresis_experiment;
pub use ir_drop::ir_drop_experiment;
pub use leakage::leakage_mc;
pub use pipeline_speedup::pipeline_speedup;
pub use power::{power_worst_case, static_power};
pub use transient::transient_read;

/// Registered experiment names, in report order.
pub const EXPERIMENTS: [&str; 7] = [
    "hysteresis",
    "cell_read",
    "leakage_mc",
    "ir_drop",
    "transient_read",
    "power_worst_case",
    "pipeline_speedup",
];

/// Comparison applied to a measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    Within { target: f64, abs_tol: f64 },
    WithinRel { target: f64, rel_tol: f64 },
    Below { limit: f64 },
    Above { limit: f64 },
    /// Reported only.
    Info,
}

impl Check {
    pub fn holds(&self, value: f64) -> Option<bool> {
        match *self {
            Check::Within { target, abs_tol } => Some((value - target).abs() <= abs_tol),
            Check::WithinRel { target, rel_tol } => Some((value - target).abs() <= rel_tol * target.abs()),
            Check::Below { limit } => Some(value < limit),
            Check::Above { limit } => Some(value > limit),
            Check::Info => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub check: Check,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

/// A CSV emitted next to the report as `<experiment>.<tag>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub tag: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub pass: bool,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
    /// Wall time, seconds. Written to `timings.json` only, so reports stay reproducible.
    #[serde(skip)]
    pub runtime_s: f64,
    #[serde(skip)]
    pub files: Vec<DataFile>,
}

impl ExperimentReport {
    pub fn new(name: &str, seed: u64) -> Self {
        Self { name: name.into(), seed, pass: true, measurements: vec![], notes: vec![], runtime_s: 0.0, files: vec![] }
    }

    pub fn check(&mut self, name: &str, value: f64, unit: &str, check: Check) -> &mut Self {
        let pass = check.holds(value);
        if pass == Some(false) || !value.is_finite() && pass.is_some() {
            self.pass = false;
        }
        self.measurements.push(Measurement { name: name.into(), value, unit: unit.into(), check, pass });
        self
    }

    pub fn info(&mut self, name: &str, value: f64, unit: &str) -> &mut Self {
        self.check(name, value, unit, Check::Info)
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn file(&mut self, tag: &str, contents: String) -> &mut Self {
        self.files.push(DataFile { tag: tag.into(), contents });
        self
    }

    pub fn measurement(&self, name: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.measurements.iter().filter(|m| m.pass == Some(false)).map(|m| m.name.as_str()).collect()
    }
}

/// Runs one experiment by name and records its wall time.
pub fn run(name: &str, cfg: &RunConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = match name {
        "hysteresis" => hysteresis_experiment(cfg),
        "cell_read" => cell_read(cfg),
        "leakage_mc" => leakage_mc(cfg),
        "ir_drop" => ir_drop_experiment(cfg),
        "transient_read" => transient_read(cfg),
        "power_worst_case" => power_worst_case(cfg),
        "pipeline_speedup" => pipeline_speedup(cfg),
        other => Err(invalid(format!("unknown experiment `{other}`; known: {}, all", EXPERIMENTS.join(", ")))),
    }?;
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs every experiment in parallel; the result keeps [`EXPERIMENTS`] order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<ExperimentReport>> {
    EXPERIMENTS.par_iter().map(|name| run(name, cfg)).collect()
}

pub fn run_selected(name: &str, cfg: &RunConfig) -> Result<Vec<ExperimentReport>> {
    if name == "all" {
        run_all(cfg)
    } else {
        Ok(vec![run(name, cfg)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub name: String,
    pub pass: bool,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub pass: bool,
    pub experiments: Vec<SummaryEntry>,
}

pub fn summarize(reports: &[ExperimentReport], seed: u64) -> Summary {
    Summary {
        seed,
        pass: reports.iter().all(|r| r.pass),
        experiments: reports
            .iter()
            .map(|r| SummaryEntry { name: r.name.clone(), pass: r.pass, failed: r.failed().into_iter().map(String::from).collect() })
            .collect(),
    }
}

/// Writes reports, CSVs, `summary.json`, `timings.json` and the effective config.
pub fn write_outputs(dir: &Path, reports: &[ExperimentReport], cfg: &RunConfig) -> Result<Summary> {
    for r in reports {
        let mut json = serde_json::to_string_pretty(r)?;
        json.push('\n');
        write_atomic(&dir.join(format!("{}.report.json", r.name)), json.as_bytes())?;
        for f in &r.files {
            write_atomic(&dir.join(format!("{}.{}.csv", r.name, f.tag)), f.contents.as_bytes())?;
        }
    }
    let summary = summarize(reports, cfg.seed);
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    let timings: serde_json::Map<String, serde_json::Value> =
        reports.iter().map(|r| (r.name.clone(), serde_json::json!(r.runtime_s))).collect();
    write_atomic(&dir.join("timings.json"), serde_json::to_string_pretty(&timings)?.as_bytes())?;
    write_atomic(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks() {
        assert_eq!(Check::Within { target: 1.0, abs_tol: 0.1 }.holds(1.05), Some(true));
        assert_eq!(Check::WithinRel { target: 2.0, rel_tol: 0.1 }.holds(2.3), Some(false));
        assert_eq!(Check::Below { limit: 0.0 }.holds(0.0), Some(false));
        assert_eq!(Check::Info.holds(5.0), None);
    }

    #[test]
    fn pass_is_conjunction() {
        let mut r = ExperimentReport::new("x", 1);
        r.check("a", 1.0, "", Check::Above { limit: 0.0 }).info("b", -3.0, "");
        assert!(r.pass);
        r.check("c", 1.0, "", Check::Below { limit: 0.0 });
        assert!(!r.pass);
        assert_eq!(r.failed(), vec!["c"]);
        let mut r = ExperimentReport::new("y", 1);
        r.check("nan", f64::NAN, "", Check::Below { limit: 1.0 });
        assert!(!r.pass);
    }

    #[test]
    fn unknown_name() {
        assert!(run("nope", &RunConfig::default()).is_err());
    }
}
