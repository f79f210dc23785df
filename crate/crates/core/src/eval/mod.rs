//! Training, evaluation, cross-validation, ablations and the kNN baseline.

pub mod ablation;
pub mod cv;
pub mod knn;
pub mod metrics;
pub mod train;

pub use ablation::{run_ablation, run_ablation_with_progress, AblationReport, AblationRow, PreparedSplit};
pub use cv::{kfold_cv, stratified_folds, CvReport, FoldSplit};
pub use knn::knn_baseline;
pub use metrics::{ConfusionMatrix, MeanStd, Metrics};
pub use train::{evaluate, train_model, train_model_with_progress, Classifier, EpochStats, Example, Standardizer, TrainReport, Weights};
