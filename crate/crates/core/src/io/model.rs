//! Versioned JSON for trained classifiers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{EyeContactModel, LabelSource, SvmHyperParams, TrainingMeta};

use super::IoError;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    feature_dim: usize,
    weights: Vec<f64>,
    bias: f64,
    label_source: LabelSource,
    hyperparams: SvmHyperParams,
    seed: u64,
    n_positive: usize,
    n_negative: usize,
}

pub fn model_to_string(model: &EyeContactModel) -> String {
    let file = ModelFile {
        version: MODEL_VERSION,
        feature_dim: model.feature_dim,
        weights: model.weights.clone(),
        bias: model.bias,
        label_source: model.meta.label_source,
        hyperparams: model.meta.hyperparams,
        seed: model.meta.hyperparams.seed,
        n_positive: model.meta.n_positive,
        n_negative: model.meta.n_negative,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_str(text: &str) -> Result<EyeContactModel, IoError> {
    let f: ModelFile = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        reason: e.to_string(),
    })?;
    if f.version != MODEL_VERSION {
        return Err(IoError::VersionMismatch {
            found: f.version,
            expected: MODEL_VERSION,
        });
    }
    if f.weights.len() != f.feature_dim {
        return Err(IoError::DimensionMismatch {
            line: 0,
            expected: f.feature_dim,
            got: f.weights.len(),
        });
    }
    if !f.bias.is_finite() || f.weights.iter().any(|w| !w.is_finite()) {
        return Err(IoError::Invalid {
            line: 0,
            reason: "model parameters must be finite".into(),
        });
    }
    let mut hyperparams = f.hyperparams;
    hyperparams.seed = f.seed;
    Ok(EyeContactModel {
        weights: f.weights,
        bias: f.bias,
        feature_dim: f.feature_dim,
        meta: TrainingMeta {
            n_positive: f.n_positive,
            n_negative: f.n_negative,
            label_source: f.label_source,
            hyperparams,
        },
    })
}

pub fn save_model(model: &EyeContactModel, path: &Path) -> Result<(), IoError> {
    fs::write(path, model_to_string(model)).map_err(|e| IoError::fs(path, e))
}

pub fn load_model(path: &Path) -> Result<EyeContactModel, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::fs(path, e))?;
    model_from_str(&text)
}
