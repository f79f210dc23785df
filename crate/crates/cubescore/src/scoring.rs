//! Inference on single trajectories against a loaded model artifact.

use std::path::Path;

use cubescore_core::artifact::ModelArtifact;
use cubescore_core::error::ArtifactError;
use cubescore_core::eval::Classifier;
use cubescore_core::features::{extract_matrix, segment_count};
use cubescore_core::{parse_trajectory_json, FeatureError, FeatureSet, TrajectorySample};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub score: u8,
    pub probabilities: [f64; 4],
    pub l_std: usize,
    pub feature_set: FeatureSet,
    pub model_version: String,
    pub warnings: Vec<String>,
}

/// Machine-readable failure returned for rejected inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ErrorBody {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error bodies serialize")
    }
}

impl From<FeatureError> for ErrorBody {
    fn from(e: FeatureError) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

/// A model held read-only for the lifetime of a process.
#[derive(Debug, Clone)]
pub struct Scorer {
    artifact: ModelArtifact,
    classifier: Classifier,
    version: String,
}

impl Scorer {
    pub fn new(artifact: ModelArtifact) -> Self {
        Self {
            classifier: artifact.classifier(),
            version: artifact.model_version(),
            artifact,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ArtifactError> {
        Ok(Self::new(ModelArtifact::load(path)?))
    }

    pub fn model_version(&self) -> &str {
        &self.version
    }

    pub fn artifact(&self) -> &ModelArtifact {
        &self.artifact
    }

    pub fn score_json(&self, text: &str) -> Result<ScoreResponse, ErrorBody> {
        let sample = parse_trajectory_json(text).map_err(|e| ErrorBody::new(e.code(), e.to_string()))?;
        self.score_sample(&sample)
    }

    pub fn score_sample(&self, sample: &TrajectorySample) -> Result<ScoreResponse, ErrorBody> {
        let spec = &self.artifact.normalization;
        let matrix = extract_matrix(sample, spec)?;
        let probabilities = self
            .classifier
            .predict_proba(&[&matrix])
            .map_err(|e| ErrorBody::new("model_error", e.to_string()))?[0];
        let score = argmax(&probabilities) as u8;
        Ok(ScoreResponse {
            score,
            probabilities,
            l_std: spec.l_std,
            feature_set: spec.feature_set,
            model_version: self.version.clone(),
            warnings: warnings(segment_count(sample), spec.l_std),
        })
    }
}

/// First index of the largest value, so ties resolve to the lower score.
pub fn argmax(p: &[f64; 4]) -> usize {
    let mut best = 0;
    for i in 1..4 {
        if p[i] > p[best] {
            best = i;
        }
    }
    best
}

fn warnings(segments: usize, l_std: usize) -> Vec<String> {
    let mut out = Vec::new();
    if segments * 2 < l_std {
        out.push(format!(
            "short drawing: {segments} segments stretched to {l_std}; the score may be unreliable"
        ));
    } else if segments > 2 * l_std {
        out.push(format!(
            "long drawing: {segments} segments compressed to {l_std}; fine motion detail is lost"
        ));
    }
    out
}
