//! Precision/recall/F1 reporting from confusion counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with class 1 (bot) as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class and averaged metrics, recomputable from the stored confusion
/// counts. The fingerprint and seed slots are filled by whoever emits the
/// report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: Confusion,
    /// Index 0: human class, index 1: bot class.
    pub per_class: [ClassMetrics; 2],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_fingerprint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl MetricsReport {
    /// Builds the full report from confusion counts alone.
    pub fn from_confusion(confusion: Confusion) -> MetricsReport {
        let Confusion { tp, fp, tn, fn_ } = confusion;
        let n = tp + fp + tn + fn_;
        let class = |tp: usize, fp: usize, fn_: usize, support: usize| {
            let precision = safe_div(tp as f64, (tp + fp) as f64);
            let recall = safe_div(tp as f64, (tp + fn_) as f64);
            let f1 = safe_div(2.0 * precision * recall, precision + recall);
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            }
        };
        // For class 0 the roles of the counts flip.
        let c0 = class(tn, fn_, fp, tn + fp);
        let c1 = class(tp, fp, fn_, tp + fn_);
        let weighted = |m0: f64, m1: f64| {
            safe_div(m0 * c0.support as f64 + m1 * c1.support as f64, n as f64)
        };
        MetricsReport {
            confusion,
            per_class: [c0, c1],
            macro_precision: (c0.precision + c1.precision) / 2.0,
            macro_recall: (c0.recall + c1.recall) / 2.0,
            macro_f1: (c0.f1 + c1.f1) / 2.0,
            weighted_precision: weighted(c0.precision, c1.precision),
            weighted_recall: weighted(c0.recall, c1.recall),
            weighted_f1: weighted(c0.f1, c1.f1),
            accuracy: safe_div((tp + tn) as f64, n as f64),
            config_fingerprint: None,
            seed: None,
        }
    }
}

/// Computes the report from parallel prediction/label vectors.
pub fn metrics(preds: &[u8], labels: &[u8]) -> Result<MetricsReport> {
    if preds.len() != labels.len() {
        return Err(Error::Dimension {
            context: "metrics labels",
            expected: preds.len(),
            actual: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::config("metrics need at least one prediction"));
    }
    let mut c = Confusion::default();
    for (&p, &y) in preds.iter().zip(labels) {
        match (y, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            _ => {
                return Err(Error::data(format!(
                    "metrics expect binary values, got prediction {p} / label {y}"
                )))
            }
        }
    }
    Ok(MetricsReport::from_confusion(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let labels = [0u8, 1, 1, 0, 1];
        let report = metrics(&labels, &labels).unwrap();
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.weighted_f1, 1.0);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.per_class[0].precision, 1.0);
        assert_eq!(report.per_class[1].recall, 1.0);
    }

    #[test]
    fn all_positive_predictions_on_balanced_set_hit_one_third_macro_f1() {
        // Positive class: precision 0.5, recall 1 -> F1 2/3. Negative class:
        // recall 0 -> F1 0. Macro F1 = 1/3.
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let preds = vec![1u8; 100];
        let report = metrics(&preds, &labels).unwrap();
        assert!((report.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.per_class[0].f1, 0.0);
        assert!((report.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_predictions_on_balanced_set_sit_near_chance() {
        let mut rng = crate::rng::stream(3, crate::rng::tag::SYNTH, 0);
        let n = 20_000;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let preds: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        let report = metrics(&preds, &labels).unwrap();
        assert!((report.macro_f1 - 0.5).abs() < 0.05, "{}", report.macro_f1);
    }

    #[test]
    fn report_is_recomputable_from_confusion_counts() {
        let labels = [0u8, 1, 1, 0, 1, 0, 0, 1, 1, 1];
        let preds = [0u8, 1, 0, 1, 1, 0, 1, 0, 1, 1];
        let report = metrics(&preds, &labels).unwrap();
        let rebuilt = MetricsReport::from_confusion(report.confusion);
        assert_eq!(report, rebuilt);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(metrics(&[1, 0], &[1]).is_err());
    }
}
