//! Experiment reports as JSON and CSV.

use std::fs;
use std::path::Path;

use crate::evaluation::ExperimentReport;

use super::IoError;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

pub fn report_to_json(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// One row per breakdown cell.
pub fn report_to_csv(report: &ExperimentReport) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cell", "n_train", "n_test", "n_excluded", "mcc", "mean", "sd", "reason"])?;
    for c in &report.cells {
        w.write_record([
            c.id.clone(),
            c.n_train.to_string(),
            c.n_test.to_string(),
            c.n_excluded.to_string(),
            format!("{:.6}", c.mcc),
            format!("{:.6}", c.mean),
            format!("{:.6}", c.sd),
            c.reason.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Invalid {
        line: 0,
        reason: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.json` and `report.csv` into `dir`, creating it if needed.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::fs(dir, e))?;
    let json = dir.join(REPORT_JSON);
    fs::write(&json, report_to_json(report)).map_err(|e| IoError::fs(&json, e))?;
    let csv = dir.join(REPORT_CSV);
    fs::write(&csv, report_to_csv(report)?).map_err(|e| IoError::fs(&csv, e))
}

pub fn read_report(dir: &Path) -> Result<ExperimentReport, IoError> {
    let path = dir.join(REPORT_JSON);
    let text = fs::read_to_string(&path).map_err(|e| IoError::fs(&path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        reason: e.to_string(),
    })
}
