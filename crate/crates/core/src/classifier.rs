//! Linear SVM eye contact classifier trained with Pegasos-style stochastic
//! subgradient descent on the L2-regularized hinge loss.
//!
//! The returned weights are the average of the iterates over the final
//! epoch. The bias is learned as the weight of a constant 1 feature appended to
//! every sample, so it is regularized together with the weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("training needs both classes, got {positives} positive and {negatives} negative samples")]
    SingleClass { positives: usize, negatives: usize },
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(&'static str),
    #[error("features must be finite")]
    NonFinite,
}

/// Where training labels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    Clustered,
    GroundTruth,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::Clustered => "clustered",
            LabelSource::GroundTruth => "ground-truth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Step size at iteration t is `1 / (lambda * (t + step_offset))`.
    pub step_offset: f64,
    /// Weight hinge losses inversely to class frequency.
    pub balanced: bool,
}

impl Default for SvmHyperParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 20,
            seed: 0,
            step_offset: 0.0,
            balanced: false,
        }
    }
}

impl SvmHyperParams {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(SvmError::InvalidHyperParams("lambda must be positive"));
        }
        if self.epochs == 0 {
            return Err(SvmError::InvalidHyperParams("epochs must be at least 1"));
        }
        if !(self.step_offset >= 0.0) {
            return Err(SvmError::InvalidHyperParams("step offset must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n_positive: usize,
    pub n_negative: usize,
    pub label_source: LabelSource,
    pub hyperparams: SvmHyperParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeContactModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_dim: usize,
    pub meta: TrainingMeta,
}

impl EyeContactModel {
    pub fn decision_value(&self, feature: &[f64]) -> Result<f64, SvmError> {
        if feature.len() != self.feature_dim {
            return Err(SvmError::DimensionMismatch {
                expected: self.feature_dim,
                got: feature.len(),
            });
        }
        Ok(dot(&self.weights, feature) + self.bias)
    }

    /// Eye contact when the decision value is >= 0.
    pub fn predict(&self, feature: &[f64]) -> Result<bool, SvmError> {
        Ok(self.decision_value(feature)? >= 0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_inputs<F: AsRef<[f64]>>(features: &[F], labels: &[bool]) -> Result<usize, SvmError> {
    if features.len() != labels.len() {
        return Err(SvmError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    let dim = features.first().map_or(0, |f| f.as_ref().len());
    for f in features {
        let f = f.as_ref();
        if f.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                got: f.len(),
            });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite);
        }
    }
    Ok(dim)
}

pub fn train_svm<F: AsRef<[f64]>>(
    features: &[F],
    labels: &[bool],
    hp: &SvmHyperParams,
    label_source: LabelSource,
) -> Result<EyeContactModel, SvmError> {
    hp.validate()?;
    let dim = check_inputs(features, labels)?;
    let n_positive = labels.iter().filter(|&&l| l).count();
    let n_negative = labels.len() - n_positive;
    if n_positive == 0 || n_negative == 0 {
        return Err(SvmError::SingleClass {
            positives: n_positive,
            negatives: n_negative,
        });
    }

    let n = labels.len() as f64;
    let (w_pos, w_neg) = if hp.balanced {
        (n / (2.0 * n_positive as f64), n / (2.0 * n_negative as f64))
    } else {
        (1.0, 1.0)
    };

    // last entry is the bias weight
    let mut w = vec![0.0; dim + 1];
    let radius = 1.0 / hp.lambda.sqrt();
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut t = 0.0;
    // iterate average over the final epoch
    let mut avg = vec![0.0; dim + 1];

    for epoch in 0..hp.epochs {
        let last = epoch + 1 == hp.epochs;
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1.0;
            let eta = 1.0 / (hp.lambda * (t + hp.step_offset));
            let x = features[i].as_ref();
            let y = if labels[i] { 1.0 } else { -1.0 };
            let margin = y * (dot(&w[..dim], x) + w[dim]);
            let shrink = 1.0 - eta * hp.lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                let c = eta * y * if labels[i] { w_pos } else { w_neg };
                for (wj, xj) in w[..dim].iter_mut().zip(x) {
                    *wj += c * xj;
                }
                w[dim] += c;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            if last {
                avg.iter_mut().zip(&w).for_each(|(a, v)| *a += v);
            }
        }
    }

    let n_last = labels.len() as f64;
    let mut w: Vec<f64> = avg.into_iter().map(|a| a / n_last).collect();
    let bias = w.pop().unwrap();
    Ok(EyeContactModel {
        weights: w,
        bias,
        feature_dim: dim,
        meta: TrainingMeta {
            n_positive,
            n_negative,
            label_source,
            hyperparams: *hp,
        },
    })
}

/// `lambda/2 * |w|^2 + mean hinge loss`, with the bias counted in `w`.
pub fn objective<F: AsRef<[f64]>>(
    weights: &[f64],
    bias: f64,
    features: &[F],
    labels: &[bool],
    lambda: f64,
) -> f64 {
    let reg = 0.5 * lambda * (weights.iter().map(|v| v * v).sum::<f64>() + bias * bias);
    let hinge: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &l)| {
            let y = if l { 1.0 } else { -1.0 };
            (1.0 - y * (dot(weights, x.as_ref()) + bias)).max(0.0)
        })
        .sum();
    reg + hinge / labels.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn toy() -> (Vec<Vec<f64>>, Vec<bool>) {
        (
            vec![vec![-1.0], vec![-2.0], vec![1.0], vec![2.0]],
            vec![false, false, true, true],
        )
    }

    fn model(weights: Vec<f64>, bias: f64) -> EyeContactModel {
        EyeContactModel {
            feature_dim: weights.len(),
            weights,
            bias,
            meta: TrainingMeta {
                n_positive: 1,
                n_negative: 1,
                label_source: LabelSource::GroundTruth,
                hyperparams: SvmHyperParams::default(),
            },
        }
    }

    #[test]
    fn separable_1d_is_fit_exactly() {
        let (x, y) = toy();
        let m = train_svm(&x, &y, &SvmHyperParams::default(), LabelSource::GroundTruth).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), *yi);
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let (x, y) = toy();
        let hp = SvmHyperParams { seed: 99, ..Default::default() };
        let a = train_svm(&x, &y, &hp, LabelSource::GroundTruth).unwrap();
        let b = train_svm(&x, &y, &hp, LabelSource::GroundTruth).unwrap();
        assert_eq!(
            a.weights.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.weights.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn gaussian_blobs_generalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut sample = |n: usize| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for i in 0..n {
                let pos = i % 2 == 0;
                let c = if pos { 1.0 } else { -1.0 };
                x.push((0..8).map(|_| c + noise.sample(&mut rng)).collect::<Vec<f64>>());
                y.push(pos);
            }
            (x, y)
        };
        let (xt, yt) = sample(200);
        let (xh, yh) = sample(1000);
        let m = train_svm(&xt, &yt, &SvmHyperParams::default(), LabelSource::GroundTruth).unwrap();
        let correct = xh
            .iter()
            .zip(&yh)
            .filter(|(x, y)| m.predict(x).unwrap() == **y)
            .count();
        assert!(correct as f64 / 1000.0 >= 0.95, "accuracy {}", correct);
        // final objective does not exceed the objective at w = 0
        let start = objective(&[0.0; 8], 0.0, &xt, &yt, 1e-4);
        let end = objective(&m.weights, m.bias, &xt, &yt, 1e-4);
        assert!(end <= start);
    }

    #[test]
    fn single_class_is_degenerate() {
        let err = train_svm(&[vec![1.0], vec![2.0]], &[true, true], &SvmHyperParams::default(), LabelSource::Clustered)
            .unwrap_err();
        assert_eq!(err, SvmError::SingleClass { positives: 2, negatives: 0 });
    }

    #[test]
    fn ragged_features_rejected() {
        let err = train_svm(&[vec![1.0], vec![2.0, 3.0]], &[true, false], &SvmHyperParams::default(), LabelSource::Clustered)
            .unwrap_err();
        assert_eq!(err, SvmError::DimensionMismatch { expected: 1, got: 2 });
    }

    #[test]
    fn bad_hyperparams_rejected() {
        let (x, y) = toy();
        let hp = SvmHyperParams { lambda: 0.0, ..Default::default() };
        assert!(train_svm(&x, &y, &hp, LabelSource::GroundTruth).is_err());
        let hp = SvmHyperParams { epochs: 0, ..Default::default() };
        assert!(train_svm(&x, &y, &hp, LabelSource::GroundTruth).is_err());
    }

    #[test]
    fn decision_values() {
        assert_eq!(model(vec![0.0; 3], 0.0).decision_value(&[4.0, -2.0, 7.0]).unwrap(), 0.0);
        assert_eq!(model(vec![1.0, 0.0, 0.0], -1.0).decision_value(&[3.0, 0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(
            model(vec![1.0, 0.0], 0.0).decision_value(&[1.0]).unwrap_err(),
            SvmError::DimensionMismatch { expected: 2, got: 1 }
        );
    }

    #[test]
    fn prediction_thresholds_at_zero() {
        let m = model(vec![1.0], 0.0);
        assert!(m.predict(&[2.0]).unwrap());
        assert!(!m.predict(&[-0.5]).unwrap());
        assert!(m.predict(&[0.0]).unwrap());
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn prediction_invariant_to_positive_scaling() {
        let m = model(vec![0.3, -1.2], 0.4);
        let scaled = model(vec![0.3 * 7.5, -1.2 * 7.5], 0.4 * 7.5);
        for f in [[1.0, 0.0], [0.0, 1.0], [-2.0, 0.5], [3.0, 1.1]] {
            assert_eq!(m.predict(&f).unwrap(), scaled.predict(&f).unwrap());
        }
    }
}
