//! Automatic fine-grained (0–3) scoring of cube copying drawings from pen
//! trajectories.
//!
//! The pipeline is: [`trajectory`] documents → segment features
//! ([`features`]) → a recurrent attention classifier ([`nn`]) trained and
//! evaluated by [`eval`]. [`synth`] generates labeled drawings for all four
//! score levels and [`stats`] provides cohort-level summaries.

pub mod artifact;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod nn;
pub mod stats;
pub mod synth;
pub mod trajectory;

pub use dataset::{split_dataset, Dataset, Split};
pub use error::{DatasetError, FeatureError, ModelError, StatsError, TrainError, TrajectoryError};
pub use features::{FeatureMatrix, FeatureSet, NormalizationSpec};
pub use trajectory::{
    parse_trajectory_json, serialize_trajectory, ClinicalGroup, ScoreLabel, SubjectMeta, TrajectoryPoint,
    TrajectorySample,
};
