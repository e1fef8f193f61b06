//! Report records, convergence tables and CSV artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use semiprop_core::convergence::convergence_table;

use crate::args::{CliError, CliResult, Params};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Residuals at or below this count as round-off in convergence tables.
pub const ROUND_OFF_FLOOR: f64 = 1e-13;

/// How a measured value is judged against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// `value <= tolerance`.
    AtMost,
    /// `value >= tolerance` (negative controls).
    AtLeast,
    /// `|value - target| <= tolerance`.
    Within,
    /// Reported only; never affects the overall verdict.
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub criterion: Criterion,
    pub pass: bool,
    pub diagnostic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub residual: f64,
    /// `None` (JSON `null`) where the order is not applicable.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub name: String,
    pub rows: Vec<ConvergenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEcho {
    pub name: String,
    pub check: String,
    pub parameters: BTreeMap<String, String>,
}

/// Top-level JSON document; field order is the serialisation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: ScenarioEcho,
    pub checks: Vec<CheckRecord>,
    pub convergence: Option<Vec<ConvergenceTable>>,
    pub seed: Option<u64>,
    pub runtime_seconds: f64,
    pub version: &'static str,
    pub pass: bool,
}

/// A CSV file produced by a check: header plus rows of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Mutable state of one check while it runs.
pub struct Run {
    pub params: Params,
    pub checks: Vec<CheckRecord>,
    pub convergence: Vec<ConvergenceTable>,
    pub tables: Vec<CsvTable>,
    pub seed: Option<u64>,
}

impl Run {
    pub fn new(params: Params) -> Self {
        Self { params, checks: Vec::new(), convergence: Vec::new(), tables: Vec::new(), seed: None }
    }

    fn push(&mut self, name: &str, value: f64, target: Option<f64>, tolerance: Option<f64>, criterion: Criterion) {
        let pass = value.is_finite()
            && match criterion {
                Criterion::AtMost => value <= tolerance.unwrap_or(0.0),
                Criterion::AtLeast => value >= tolerance.unwrap_or(0.0),
                Criterion::Within => (value - target.unwrap_or(f64::NAN)).abs() <= tolerance.unwrap_or(0.0),
                Criterion::Diagnostic => true,
            };
        let diagnostic = criterion == Criterion::Diagnostic;
        self.checks.push(CheckRecord { name: name.to_string(), value, target, tolerance, criterion, pass, diagnostic });
    }

    pub fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, None, Some(tolerance), Criterion::AtMost);
    }

    pub fn at_least(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value, None, Some(threshold), Criterion::AtLeast);
    }

    pub fn within(&mut self, name: &str, value: f64, target: f64, tolerance: f64) {
        self.push(name, value, Some(target), Some(tolerance), Criterion::Within);
    }

    pub fn diagnostic(&mut self, name: &str, value: f64) {
        self.push(name, value, None, None, Criterion::Diagnostic);
    }

    /// Record a convergence table (at least three levels, coarse to fine) and
    /// return the order observed on the finest pair.
    pub fn convergence(&mut self, name: &str, levels: &[(f64, f64)]) -> CliResult<Option<f64>> {
        let rows = convergence_table(levels, ROUND_OFF_FLOOR)?;
        let last = rows.last().and_then(|r| r.order);
        self.convergence.push(ConvergenceTable {
            name: name.to_string(),
            rows: rows.into_iter().map(|r| ConvergenceRow { h: r.h, residual: r.residual, order: r.order }).collect(),
        });
        Ok(last)
    }

    pub fn table(&mut self, file: &str, header: &[&str], rows: Vec<Vec<f64>>) {
        self.tables.push(CsvTable { file: file.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.diagnostic || c.pass)
    }
}

/// Seventeen significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

pub fn write_csv(dir: &Path, table: &CsvTable) -> CliResult<()> {
    let path = dir.join(&table.file);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(&table.header).map_err(|e| csv_error(&path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_float(*v))).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|source| CliError::Io { path, source })
}

pub fn write_convergence_csv(dir: &Path, table: &ConvergenceTable) -> CliResult<()> {
    let path = dir.join(format!("convergence_{}.csv", table.name));
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["h", "residual", "order"]).map_err(|e| csv_error(&path, e))?;
    for r in &table.rows {
        let order = r.order.map(format_float).unwrap_or_else(|| "n/a".to_string());
        w.write_record([format_float(r.h), format_float(r.residual), order]).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|source| CliError::Io { path, source })
}

pub fn write_report(dir: &Path, report: &Report) -> CliResult<()> {
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Output(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|source| CliError::Io { path, source })
}
