use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, pred: bool, gt: bool) {
        match (pred, gt) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    /// Both ground-truth classes occur.
    pub fn has_both_classes(&self) -> bool {
        self.tp + self.fn_ > 0 && self.tn + self.fp > 0
    }
}

pub fn confusion_matrix(pred: &[bool], gt: &[bool]) -> Result<ConfusionCounts, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::LengthMismatch {
            predictions: pred.len(),
            ground_truth: gt.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvalError::EmptyCounts);
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.iter().zip(gt) {
        c.add(p, g);
    }
    Ok(c)
}

/// Matthews correlation coefficient. A zero factor in the denominator
/// (a class that is never predicted or never occurs) yields 0.
pub fn mcc(c: &ConfusionCounts) -> Result<f64, EvalError> {
    if c.total() == 0 {
        return Err(EvalError::EmptyCounts);
    }
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(((tp * tn - fp * fn_) / den.sqrt()).clamp(-1.0, 1.0))
}

/// Mean and sample standard deviation (n - 1); the deviation is 0 for fewer
/// than two values.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_for_perfect_predictions() {
        let c = confusion_matrix(&[true, true, false], &[true, true, false]).unwrap();
        assert_eq!(c, ConfusionCounts::new(2, 0, 1, 0));
    }

    #[test]
    fn counts_for_inverted_predictions() {
        let gt = [true, false, false, true];
        let pred: Vec<bool> = gt.iter().map(|g| !g).collect();
        let c = confusion_matrix(&pred, &gt).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
    }

    #[test]
    fn hand_counted_confusion() {
        let t = true;
        let f = false;
        let pred = [t, f, t, f, t, t, f, t, f, t];
        let gt = [t, f, f, t, t, t, f, f, f, t];
        assert_eq!(confusion_matrix(&pred, &gt).unwrap(), ConfusionCounts::new(4, 2, 3, 1));
    }

    #[test]
    fn length_mismatch_and_empty() {
        assert!(matches!(confusion_matrix(&[true], &[]), Err(EvalError::LengthMismatch { .. })));
        assert_eq!(confusion_matrix(&[], &[]), Err(EvalError::EmptyCounts));
        assert_eq!(mcc(&ConfusionCounts::default()), Err(EvalError::EmptyCounts));
    }

    #[test]
    fn mcc_reference_values() {
        assert_eq!(mcc(&ConfusionCounts::new(5, 0, 5, 0)).unwrap(), 1.0);
        assert_eq!(mcc(&ConfusionCounts::new(0, 5, 0, 5)).unwrap(), -1.0);
        // (12 - 2) / sqrt(5 * 6 * 4 * 5)
        let v = mcc(&ConfusionCounts::new(4, 1, 3, 2)).unwrap();
        assert!((v - 0.40825).abs() < 1e-5);
        assert_eq!(mcc(&ConfusionCounts::new(3, 2, 0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[0.7]), (0.7, 0.0));
    }

    proptest! {
        #[test]
        fn flipping_both_sides_preserves_mcc(
            pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..200)
        ) {
            let (pred, gt): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let a = mcc(&confusion_matrix(&pred, &gt).unwrap()).unwrap();
            let fp: Vec<bool> = pred.iter().map(|v| !v).collect();
            let fg: Vec<bool> = gt.iter().map(|v| !v).collect();
            let b = mcc(&confusion_matrix(&fp, &fg).unwrap()).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn perfect_and_inverted(gt in proptest::collection::vec(any::<bool>(), 2..100)) {
            prop_assume!(gt.iter().any(|v| *v) && gt.iter().any(|v| !*v));
            prop_assert_eq!(mcc(&confusion_matrix(&gt, &gt).unwrap()).unwrap(), 1.0);
            let inv: Vec<bool> = gt.iter().map(|v| !v).collect();
            prop_assert_eq!(mcc(&confusion_matrix(&inv, &gt).unwrap()).unwrap(), -1.0);
        }
    }
}
