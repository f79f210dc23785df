//! k-nearest-neighbour baseline on flattened, standardized feature matrices.

use super::metrics::Metrics;
use super::train::{Example, Standardizer};
use crate::error::TrainError;
use crate::trajectory::ScoreLabel;

fn flatten(scaler: &Standardizer, e: &Example) -> Vec<f64> {
    scaler.transform::<f64>(&e.matrix).iter().copied().collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Majority vote among the `k` nearest training vectors. Ties go to the class
/// with the smallest summed distance, then to the lowest class index.
pub fn knn_vote(train: &[(Vec<f64>, ScoreLabel)], query: &[f64], k: usize) -> ScoreLabel {
    let mut dists: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (distance(v, query), i))
        .collect();
    dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.clamp(1, train.len());
    let mut votes = [0usize; ScoreLabel::NUM_CLASSES];
    let mut dist_sum = [0.0f64; ScoreLabel::NUM_CLASSES];
    for &(d, i) in &dists[..k] {
        let c = train[i].1.index();
        votes[c] += 1;
        dist_sum[c] += d;
    }
    let best = (0..ScoreLabel::NUM_CLASSES)
        .filter(|&c| votes[c] > 0)
        .min_by(|&a, &b| {
            votes[b]
                .cmp(&votes[a])
                .then(dist_sum[a].total_cmp(&dist_sum[b]))
                .then(a.cmp(&b))
        })
        .expect("at least one vote");
    ScoreLabel::ALL[best]
}

/// Fits the standardizer on `train`, then classifies every test matrix.
pub fn knn_baseline(train: &[Example], test: &[Example], k_neighbors: usize) -> Result<Metrics, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if test.is_empty() {
        return Err(TrainError::EmptyEvalSet);
    }
    let expected = train[0].matrix.shape();
    if let Some(e) = train.iter().chain(test).find(|e| e.matrix.shape() != expected) {
        return Err(TrainError::ShapeMismatch {
            expected,
            got: e.matrix.shape(),
        });
    }
    let scaler = Standardizer::fit(train.iter().map(|e| &e.matrix));
    let reference: Vec<(Vec<f64>, ScoreLabel)> = train.iter().map(|e| (flatten(&scaler, e), e.label)).collect();
    let predicted: Vec<ScoreLabel> = test
        .iter()
        .map(|e| knn_vote(&reference, &flatten(&scaler, e), k_neighbors))
        .collect();
    let truth: Vec<ScoreLabel> = test.iter().map(|e| e.label).collect();
    Ok(Metrics::from_predictions(&truth, &predicted))
}
