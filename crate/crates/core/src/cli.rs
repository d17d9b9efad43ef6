//! Command-line entry points.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::classifier::LabelSource;
use crate::evaluation::{
    run_cross_experiment, run_within_experiment, train_dataset_model, Breakdown, EvalError,
    ExperimentConfig, ExperimentReport,
};
use crate::io::{self, IoError};
use crate::pipeline::ClusterScope;
use crate::synthgen::{generate_dataset, GeneratorConfig, GeneratorError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eyecontact", version, about = "Eye contact detection from gaze estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Labels {
    /// Labels derived by clustering gaze points.
    Cluster,
    /// Ground-truth annotations.
    Gt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum By {
    None,
    Category,
    Headpose,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scope {
    Pooled,
    PerPerson,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    labels: Labels,
    #[arg(long, value_enum, default_value = "none")]
    by: By,
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaze-point clustering radius in mm.
    #[arg(long)]
    eps_mm: Option<f64>,
    /// Minimum neighbourhood size for a core point.
    #[arg(long)]
    min_samples: Option<usize>,
    #[arg(long, value_enum)]
    cluster_scope: Option<Scope>,
    /// Subsample at most this many gaze points per clustering run.
    #[arg(long)]
    max_cluster_samples: Option<usize>,
    /// Smallest share of clustered gaze points a cluster needs to be chosen
    /// as the eye-contact target.
    #[arg(long)]
    min_target_fraction: Option<f64>,
    /// SVM regularization strength.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset.
    Generate {
        /// JSON generator configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Leave-one-person-out evaluation on one dataset.
    RunWithin {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Train on one dataset, test on another.
    RunCross {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Also save the trained classifier as JSON.
        #[arg(long)]
        save_model: Option<PathBuf>,
    },
    /// Print a written report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("{path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("{0}")]
    Usage(String),
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig {
            label_source: match self.labels {
                Labels::Cluster => LabelSource::Clustered,
                Labels::Gt => LabelSource::GroundTruth,
            },
            breakdown: match self.by {
                By::None => Breakdown::None,
                By::Category => Breakdown::VisibilityCategory,
                By::Headpose => Breakdown::HeadposeBucket,
            },
            seed: self.seed,
            ..Default::default()
        };
        if let Some(e) = self.eps_mm {
            cfg.cluster.eps_mm = e;
        }
        if let Some(m) = self.min_samples {
            cfg.cluster.min_samples = m;
        }
        if let Some(s) = self.cluster_scope {
            cfg.cluster.scope = match s {
                Scope::Pooled => ClusterScope::Pooled,
                Scope::PerPerson => ClusterScope::PerPerson,
            };
        }
        cfg.cluster.max_samples = self.max_cluster_samples;
        if let Some(f) = self.min_target_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(CliError::Usage("--min-target-fraction must lie in [0, 1]".into()));
            }
            cfg.cluster.min_target_fraction = f;
        }
        if let Some(l) = self.lambda {
            cfg.svm.lambda = l;
        }
        if let Some(e) = self.epochs {
            cfg.svm.epochs = e;
        }
        cfg.svm
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if !(cfg.cluster.eps_mm.is_finite() && cfg.cluster.eps_mm > 0.0) || cfg.cluster.min_samples == 0 {
            return Err(CliError::Usage(
                "--eps-mm must be positive and --min-samples at least 1".into(),
            ));
        }
        Ok(cfg)
    }
}

fn summary(out: &mut dyn Write, report: &ExperimentReport, dir: &Path) {
    let _ = writeln!(
        out,
        "{} {}: mcc {:.4}, fold mean {:.4} (sd {:.4}), {}/{} frames scored; wrote {}",
        report.kind,
        report.label_source.as_str(),
        report.mcc,
        report.mean,
        report.sd,
        report.frames_scored,
        report.frames_total,
        dir.display()
    );
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Generate { config, out: path, seed } => {
            let mut cfg = match &config {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|e| IoError::fs(p, e))?;
                    serde_json::from_str::<GeneratorConfig>(&text).map_err(|e| CliError::Config {
                        path: p.clone(),
                        reason: e.to_string(),
                    })?
                }
                None => GeneratorConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let records = generate_dataset(&cfg)?;
            io::write_dataset(&records, &path)?;
            let _ = writeln!(out, "wrote {} frames to {}", records.len(), path.display());
        }
        Command::RunWithin { dataset, exp } => {
            let cfg = exp.config()?;
            let records = io::read_dataset(&dataset)?;
            let report = run_within_experiment(&records, &cfg)?;
            io::write_report(&report, &exp.out)?;
            summary(out, &report, &exp.out);
        }
        Command::RunCross {
            train,
            test,
            exp,
            save_model,
        } => {
            let cfg = exp.config()?;
            let train_records = io::read_dataset(&train)?;
            let test_records = io::read_dataset(&test)?;
            let report = run_cross_experiment(&train_records, &test_records, &cfg)?;
            io::write_report(&report, &exp.out)?;
            if let Some(p) = save_model {
                let model = train_dataset_model(&train_records, &cfg)?;
                io::save_model(&model, &p)?;
            }
            summary(out, &report, &exp.out);
        }
        Command::Report { input, format } => {
            let report = io::read_report(&input)?;
            let text = match format {
                Format::Json => io::report_to_json(&report),
                Format::Csv => io::report_to_csv(&report)?,
            };
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code: 0 success, 1 usage error, 2 data error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}
