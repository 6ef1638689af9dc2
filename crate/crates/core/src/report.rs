//! Experiment rows and deterministic report emission.
//!
//! Reports are plain CSV or JSON built from formatted values only, so a
//! fixed (config, seed) pair produces byte-identical output no matter how
//! many threads did the work. Wall times are recorded only on request for
//! the same reason.

use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

/// One estimate at one horizon.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub scenario: String,
    pub n: usize,
    pub event: String,
    pub method: String,
    pub value: f64,
    pub stderr: f64,
    /// Largest member mean.
    pub center_hi: f64,
    /// Smallest member mean.
    pub center_lo: f64,
    /// Zero unless timing capture was enabled.
    pub wall_ms: u64,
}

pub const ROW_HEADER: &str = "scenario,n,event,method,value,stderr,center_hi,center_lo,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}`, expected csv or json")),
        }
    }
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(ROW_HEADER);
    out.push('\n');
    for r in rows {
        debug_assert!(!r.scenario.contains(',') && !r.event.contains(','));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario, r.n, r.event, r.method, r.value, r.stderr, r.center_hi, r.center_lo,
            r.wall_ms
        )
        .expect("write to string");
    }
    out
}

pub fn rows_to_json(rows: &[ExperimentRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("serializable rows");
    s.push('\n');
    s
}

pub fn render(rows: &[ExperimentRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => rows_to_csv(rows),
        ReportFormat::Json => rows_to_json(rows),
    }
}

/// Write to the given file, or to stdout when no path is set.
pub fn emit(dest: Option<&Path>, content: &str) -> std::io::Result<()> {
    match dest {
        Some(path) => std::fs::write(path, content),
        None => {
            use std::io::Write as _;
            std::io::stdout().write_all(content.as_bytes())
        }
    }
}
