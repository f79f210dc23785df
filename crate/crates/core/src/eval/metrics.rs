use serde::{Deserialize, Serialize};

use crate::trajectory::ScoreLabel;

const K: usize = ScoreLabel::NUM_CLASSES;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ScoreLabel, ScoreLabel)>) -> Self {
        let mut counts = [[0; K]; K];
        for (truth, pred) in pairs {
            counts[truth.index()][pred.index()] += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..K).map(|k| self.counts[k][k]).sum()
    }

    fn predicted(&self, class: usize) -> u64 {
        (0..K).map(|r| self.counts[r][class]).sum()
    }

    fn actual(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub f1_macro: f64,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    /// Accuracy plus macro-averaged precision and F1 over all four classes.
    /// Empty denominators count as 0.
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let per_class: Vec<ClassScores> = (0..K)
            .map(|c| {
                let tp = confusion.counts[c][c];
                let precision = ratio(tp, confusion.predicted(c));
                let recall = ratio(tp, confusion.actual(c));
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassScores {
                    precision,
                    recall,
                    f1,
                }
            })
            .collect();
        let precision_macro = per_class.iter().map(|c| c.precision).sum::<f64>() / K as f64;
        let f1_macro = per_class.iter().map(|c| c.f1).sum::<f64>() / K as f64;
        Self {
            accuracy: ratio(confusion.trace(), confusion.total()),
            precision_macro,
            f1_macro,
            per_class,
            confusion,
        }
    }

    pub fn from_predictions(truth: &[ScoreLabel], predicted: &[ScoreLabel]) -> Self {
        assert_eq!(truth.len(), predicted.len());
        Self::from_confusion(ConfusionMatrix::from_pairs(
            truth.iter().copied().zip(predicted.iter().copied()),
        ))
    }
}

/// Mean and sample standard deviation of fold metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}
