//! File formats: datasets, trained models and experiment reports.

mod dataset;
mod model;
mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use dataset::{
    dataset_to_string, parse_dataset, read_dataset, write_dataset, DATASET_FORMAT,
    DATASET_VERSION,
};
pub use model::{load_model, model_from_str, model_to_string, save_model, MODEL_VERSION};
pub use report::{
    read_report, report_to_csv, report_to_json, write_report, REPORT_CSV, REPORT_JSON,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("line {line}: feature has {got} entries, header declares {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("dataset contains no records")]
    EmptyDataset,
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl IoError {
    pub(crate) fn fs(path: &Path, source: std::io::Error) -> Self {
        IoError::Fs {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}
