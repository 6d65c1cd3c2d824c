//! Artifact writing: `<out>/<subcommand>.csv` and `<out>/<subcommand>.json`.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;

pub const SCHEMA: &str = "v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "both" => Some(Format::Both),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Both => "both",
        }
    }
}

/// An asserted inequality that failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub inequality: String,
    pub slack: f64,
    pub witness: String,
}

/// What a subcommand reports: one CSV table plus summary numbers.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Map<String, Value>,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn new(header: &[&'static str]) -> Report {
        Report { header: header.to_vec(), ..Report::default() }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Records `slack ≥ -tol` as an asserted check.
    pub fn assert_slack(&mut self, inequality: &str, slack: f64, witness: Option<&str>, tol: f64) {
        if slack < -tol {
            self.failures.push(Failure {
                inequality: inequality.to_string(),
                slack,
                witness: witness.unwrap_or("none").to_string(),
            });
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_text(report: &Report) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&report.header)?;
    for r in &report.rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    Ok(format!("# schema={SCHEMA}\n{}", String::from_utf8_lossy(&body)))
}

pub struct RunInfo<'a> {
    pub subcommand: &'a str,
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub wall_time_s: f64,
    pub threads: usize,
}

fn json_value(report: &Report, info: &RunInfo) -> Value {
    let failures: Vec<Value> = report
        .failures
        .iter()
        .map(|f| json!({ "inequality": f.inequality, "slack": f.slack, "witness": f.witness }))
        .collect();
    json!({
        "schema": SCHEMA,
        "subcommand": info.subcommand,
        "git_describe": env!("VERTEXLAB_GIT_DESCRIBE"),
        "seed": info.seed,
        "wall_time_s": info.wall_time_s,
        "threads": info.threads,
        "config": info.config.values(),
        "passed": report.passed(),
        "failures": failures,
        "summary": report.summary,
        "columns": report.header,
        "rows": report.rows,
    })
}

/// Writes the requested artifacts into `dir`, creating it if needed, plus
/// `<subcommand>.cfg` holding the resolved config.
pub fn write(dir: &Path, format: Format, report: &Report, info: &RunInfo) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{}.cfg", info.subcommand)), info.config.to_text())?;
    if format != Format::Json {
        fs::write(dir.join(format!("{}.csv", info.subcommand)), csv_text(report)?)?;
    }
    if format != Format::Csv {
        let mut text = serde_json::to_string_pretty(&json_value(report, info)).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(dir.join(format!("{}.json", info.subcommand)), text)?;
    }
    Ok(())
}
