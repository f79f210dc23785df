//! Feature-set × architecture grid and the split preparation it shares with
//! the single-model commands.

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use super::train::{evaluate, train_model, Example};
use crate::dataset::{Dataset, Split};
use crate::error::TrainError;
use crate::features::{batch_extract, compute_std_length, select_feature_set, FeatureSet, NormalizationSpec};
use crate::nn::TrainConfig;
use crate::trajectory::TrajectorySample;

/// Full 14-row matrices for each split, with `l_std` taken from training.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub l_std: usize,
    pub normalize_xy: bool,
    pub train: Vec<Example>,
    pub validate: Vec<Example>,
    pub test: Vec<Example>,
}

fn examples(samples: &[&TrajectorySample], spec: &NormalizationSpec) -> Result<Vec<Example>, TrainError> {
    let extracted = batch_extract(samples.iter().copied(), spec)?;
    extracted
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(Example {
                matrix: e.matrix,
                label: e.label.ok_or(TrainError::Unlabeled(i))?,
            })
        })
        .collect()
}

impl PreparedSplit {
    /// `dataset` must already carry split assignments.
    pub fn from_dataset(dataset: &Dataset, normalize_xy: bool) -> Result<Self, TrainError> {
        let train = dataset.subset(Split::Train);
        if train.is_empty() {
            return Err(TrainError::EmptyTrainingSet);
        }
        let l_std = compute_std_length(train.iter().copied())?;
        let spec = NormalizationSpec {
            l_std,
            feature_set: FeatureSet::Scsm,
            normalize_xy,
        };
        Ok(Self {
            l_std,
            normalize_xy,
            train: examples(&train, &spec)?,
            validate: examples(&dataset.subset(Split::Validate), &spec)?,
            test: examples(&dataset.subset(Split::Test), &spec)?,
        })
    }

    pub fn spec(&self, feature_set: FeatureSet) -> NormalizationSpec {
        NormalizationSpec {
            l_std: self.l_std,
            feature_set,
            normalize_xy: self.normalize_xy,
        }
    }

    /// Train, validation and test sets restricted to `set`.
    pub fn select(&self, set: FeatureSet) -> (Vec<Example>, Vec<Example>, Vec<Example>) {
        let pick = |xs: &[Example]| -> Vec<Example> {
            xs.iter()
                .map(|e| Example {
                    matrix: if set == FeatureSet::Scsm {
                        e.matrix.clone()
                    } else {
                        select_feature_set(&e.matrix, set)
                    },
                    label: e.label,
                })
                .collect()
        };
        (pick(&self.train), pick(&self.validate), pick(&self.test))
    }
}

/// Architecture variants in table order.
pub const ARCHITECTURES: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub feature_set: FeatureSet,
    pub dimension: usize,
    pub bidirectional: bool,
    pub attention: bool,
    pub metrics: Metrics,
}

impl AblationRow {
    pub fn architecture(&self) -> String {
        TrainConfig {
            bidirectional: self.bidirectional,
            attention: self.attention,
            ..TrainConfig::default()
        }
        .architecture_name()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature_set,bidirectional,attention,accuracy,precision_macro,f1_macro\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                r.feature_set, r.bidirectional, r.attention, r.metrics.accuracy, r.metrics.precision_macro, r.metrics.f1_macro
            ));
        }
        out
    }

    /// Fixed-width text table with the feature dimension column.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<8} {:>4}  {:<18} {:>9} {:>10} {:>8}\n",
            "features", "dim", "architecture", "accuracy", "precision", "f1"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<8} {:>4}  {:<18} {:>8.2}% {:>9.2}% {:>8.3}\n",
                r.feature_set.as_str(),
                r.dimension,
                r.architecture(),
                r.metrics.accuracy * 100.0,
                r.metrics.precision_macro * 100.0,
                r.metrics.f1_macro
            ));
        }
        out
    }

    pub fn find(&self, set: FeatureSet, bidirectional: bool, attention: bool) -> Option<&AblationRow> {
        self.rows
            .iter()
            .find(|r| r.feature_set == set && r.bidirectional == bidirectional && r.attention == attention)
    }
}

/// Trains and tests one cell. Each cell uses `config.seed` unchanged, so its
/// result does not depend on which other cells run.
pub fn run_cell(
    prepared: &PreparedSplit,
    set: FeatureSet,
    bidirectional: bool,
    attention: bool,
    config: &TrainConfig,
) -> Result<AblationRow, TrainError> {
    let (train, validate, test) = prepared.select(set);
    let cell_config = TrainConfig {
        bidirectional,
        attention,
        ..config.clone()
    };
    let (model, _) = train_model(&train, &validate, &cell_config)?;
    let eval_set = if test.is_empty() { &validate } else { &test };
    Ok(AblationRow {
        feature_set: set,
        dimension: set.dim(),
        bidirectional,
        attention,
        metrics: evaluate(&model, eval_set)?,
    })
}

/// All 12 cells: {SCS, M, SCSM} × {LSTM, BiLSTM, LSTM-Attention, BiLSTM-Attention}.
pub fn run_ablation(dataset: &Dataset, config: &TrainConfig, normalize_xy: bool) -> Result<AblationReport, TrainError> {
    run_ablation_with_progress(dataset, config, normalize_xy, |_| {})
}

pub fn run_ablation_with_progress(
    dataset: &Dataset,
    config: &TrainConfig,
    normalize_xy: bool,
    mut on_row: impl FnMut(&AblationRow),
) -> Result<AblationReport, TrainError> {
    let prepared = PreparedSplit::from_dataset(dataset, normalize_xy)?;
    let mut rows = Vec::with_capacity(12);
    for set in FeatureSet::ALL {
        for (bi, att) in ARCHITECTURES {
            let row = run_cell(&prepared, set, bi, att, config)?;
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(AblationReport { rows })
}
