use serde::{Deserialize, Serialize};

use super::{Classifier, Example, MlError};
use crate::beacon::Label;

/// Outcome counts with `Authentic` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Authentic, Label::Authentic) => self.tp += 1,
            (Label::Unauthorized, Label::Unauthorized) => self.tn += 1,
            (Label::Unauthorized, Label::Authentic) => self.fp += 1,
            (Label::Authentic, Label::Unauthorized) => self.fn_ += 1,
        }
    }
}

/// Fractions in `[0, 1]`; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

impl MetricsReport {
    pub fn named(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("accuracy", self.accuracy),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("precision", self.precision),
            ("f1", self.f1),
        ]
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, MlError> {
    let n = cm.total();
    if n == 0 {
        return Err(MlError::EmptyMatrix);
    }
    let sensitivity = ratio(cm.tp, cm.tp + cm.fn_);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(s)) if p + s == 0.0 => Some(0.0),
        (Some(p), Some(s)) => Some(2.0 * p * s / (p + s)),
        _ => None,
    };
    Ok(MetricsReport {
        accuracy: ratio(cm.tp + cm.tn, n),
        sensitivity,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        precision,
        f1,
    })
}

pub fn evaluate<C: Classifier + ?Sized>(model: &C, test: &[Example]) -> Result<ConfusionMatrix, MlError> {
    if test.is_empty() {
        return Err(MlError::EmptyTestSet);
    }
    let mut cm = ConfusionMatrix::default();
    for e in test {
        cm.record(e.label, model.predict(&e.features));
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beacon::FeatureVector;
    use proptest::prelude::*;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-12)
    }

    #[test]
    fn perfect_classifier() {
        let m = compute_metrics(&ConfusionMatrix::new(10, 10, 0, 0)).unwrap();
        for (_, v) in m.named() {
            assert_eq!(v, Some(1.0));
        }
    }

    #[test]
    fn hand_evaluated_case() {
        let m = compute_metrics(&ConfusionMatrix::new(90, 85, 15, 10)).unwrap();
        assert!(close(m.accuracy, 0.875));
        assert!(close(m.sensitivity, 0.9));
        assert!(close(m.specificity, 0.85));
        assert!(close(m.precision, 90.0 / 105.0));
        // 2 * (6/7) * 0.9 / (6/7 + 0.9) = 10.8 / 12.3
        assert!(close(m.f1, 10.8 / 12.3));
        assert!((m.f1.unwrap() - 0.878048).abs() < 1e-6);
    }

    #[test]
    fn all_wrong() {
        let m = compute_metrics(&ConfusionMatrix::new(0, 0, 10, 10)).unwrap();
        for (_, v) in m.named() {
            assert_eq!(v, Some(0.0));
        }
    }

    #[test]
    fn undefined_denominators() {
        // no positives at all and nothing predicted positive
        let m = compute_metrics(&ConfusionMatrix::new(0, 7, 0, 0)).unwrap();
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.specificity, Some(1.0));
        assert_eq!(compute_metrics(&ConfusionMatrix::default()), Err(MlError::EmptyMatrix));
    }

    struct Constant(Label);
    impl Classifier for Constant {
        fn predict(&self, _: &FeatureVector) -> Label {
            self.0
        }
    }

    struct ByRssi;
    impl Classifier for ByRssi {
        fn predict(&self, x: &FeatureVector) -> Label {
            if x.0[3] > -60.0 { Label::Authentic } else { Label::Unauthorized }
        }
    }

    fn test_set() -> Vec<Example> {
        (0..20)
            .map(|i| {
                let (rssi, label) = if i < 10 { (-50.0, Label::Authentic) } else { (-70.0, Label::Unauthorized) };
                Example::new(FeatureVector([0.0, 1.0, 0.0, rssi]), label)
            })
            .collect()
    }

    #[test]
    fn evaluate_counts() {
        assert_eq!(evaluate(&ByRssi, &test_set()).unwrap(), ConfusionMatrix::new(10, 10, 0, 0));
        assert_eq!(
            evaluate(&Constant(Label::Unauthorized), &test_set()).unwrap(),
            ConfusionMatrix::new(0, 10, 0, 10)
        );
        assert_eq!(evaluate(&ByRssi, &[]), Err(MlError::EmptyTestSet));
    }

    proptest! {
        #[test]
        fn metric_identities(tp in 0u64..500, tn in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
            let cm = ConfusionMatrix::new(tp, tn, fp, fn_);
            prop_assume!(cm.total() > 0);
            let m = compute_metrics(&cm).unwrap();
            for (_, v) in m.named() {
                if let Some(v) = v {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            let n = cm.total() as f64;
            let (pos, neg) = ((tp + fn_) as f64, (tn + fp) as f64);
            let weighted = m.sensitivity.unwrap_or(0.0) * pos + m.specificity.unwrap_or(0.0) * neg;
            prop_assert!((m.accuracy.unwrap() - weighted / n).abs() < 1e-12);
            if let (Some(p), Some(s)) = (m.precision, m.sensitivity) {
                if p > 0.0 && s > 0.0 {
                    prop_assert!((m.f1.unwrap() - 2.0 / (1.0 / p + 1.0 / s)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn matrix_partitions_test_set(labels in proptest::collection::vec(any::<bool>(), 1..100), cut in -80.0f64..-40.0) {
            let test: Vec<_> = labels.iter().enumerate().map(|(i, &a)| Example::new(
                FeatureVector([0.0, 1.0, 0.0, -40.0 - (i % 40) as f64]),
                if a { Label::Authentic } else { Label::Unauthorized },
            )).collect();
            struct Cut(f64);
            impl Classifier for Cut {
                fn predict(&self, x: &FeatureVector) -> Label {
                    if x.0[3] > self.0 { Label::Authentic } else { Label::Unauthorized }
                }
            }
            prop_assert_eq!(evaluate(&Cut(cut), &test).unwrap().total(), test.len() as u64);
        }
    }
}
