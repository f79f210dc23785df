//! Stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{MeanStd, Metrics};
use super::train::{evaluate, train_model, Example};
use crate::error::{DatasetError, TrainError};
use crate::nn::TrainConfig;
use crate::trajectory::ScoreLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<usize>,
    pub validate: Vec<usize>,
}

/// Assigns every index to exactly one validation fold. Each class is shuffled
/// and dealt round-robin, starting where the previous class stopped so fold
/// sizes stay within one of each other.
pub fn stratified_folds(labels: &[ScoreLabel], k: usize, seed: u64) -> Result<Vec<FoldSplit>, DatasetError> {
    let k = k.max(2);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ScoreLabel::NUM_CLASSES];
    for (i, y) in labels.iter().enumerate() {
        by_class[y.index()].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(DatasetError::ClassTooSmall {
                class: class as u8,
                count: members.len(),
                min: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut cursor = 0usize;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok((0..k)
        .map(|fold| {
            let (validate, train) = (0..labels.len()).partition(|&i| assignment[i] == fold);
            FoldSplit { fold, train, validate }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub accuracy: MeanStd,
    pub precision_macro: MeanStd,
    pub f1_macro: MeanStd,
}

impl CvReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,accuracy,precision_macro,f1_macro\n");
        for f in &self.folds {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                f.fold, f.metrics.accuracy, f.metrics.precision_macro, f.metrics.f1_macro
            ));
        }
        out
    }
}

/// Trains one model per fold (seed = base seed + fold index) and scores it on
/// that fold's validation part.
pub fn kfold_cv(pool: &[Example], config: &TrainConfig, k: usize) -> Result<CvReport, TrainError> {
    if pool.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let labels: Vec<ScoreLabel> = pool.iter().map(|e| e.label).collect();
    let splits = stratified_folds(&labels, k, config.seed)?;
    let mut folds = Vec::with_capacity(splits.len());
    for split in &splits {
        let seed = config.seed.wrapping_add(split.fold as u64);
        let fold_config = TrainConfig {
            seed,
            ..config.clone()
        };
        let train: Vec<Example> = split.train.iter().map(|&i| pool[i].clone()).collect();
        let validate: Vec<Example> = split.validate.iter().map(|&i| pool[i].clone()).collect();
        let (model, _) = train_model(&train, &[], &fold_config)?;
        folds.push(FoldResult {
            fold: split.fold,
            seed,
            metrics: evaluate(&model, &validate)?,
        });
    }
    let summary = |f: fn(&Metrics) -> f64| MeanStd::of(&folds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    Ok(CvReport {
        accuracy: summary(|m| m.accuracy),
        precision_macro: summary(|m| m.precision_macro),
        f1_macro: summary(|m| m.f1_macro),
        folds,
    })
}
