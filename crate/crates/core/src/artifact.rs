//! Self-describing model files: configuration, feature normalization, input
//! scaling and weights in one JSON document.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ArtifactError;
use crate::eval::{Classifier, Standardizer, Weights};
use crate::features::NormalizationSpec;
use crate::nn::{ModelParams, TrainConfig};
use crate::trajectory::ScoreLabel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub config: TrainConfig,
    pub normalization: NormalizationSpec,
    pub class_labels: Vec<u8>,
    pub scaler: Standardizer,
    /// Stored as f64 regardless of training precision; f32 weights widen
    /// exactly.
    pub params: ModelParams<f64>,
}

fn inconsistent(msg: impl Into<String>) -> ArtifactError {
    ArtifactError::Inconsistent(msg.into())
}

impl ModelArtifact {
    pub fn new(model: &Classifier, normalization: NormalizationSpec) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config: model.config.clone(),
            normalization,
            class_labels: ScoreLabel::ALL.iter().map(|l| l.value()).collect(),
            scaler: model.scaler.clone(),
            params: model.weights.to_f64(),
        }
    }

    pub fn validate(&self) -> Result<(), ArtifactError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ArtifactError::UnsupportedVersion(self.format_version.to_string()));
        }
        let expected_labels: Vec<u8> = ScoreLabel::ALL.iter().map(|l| l.value()).collect();
        if self.class_labels != expected_labels {
            return Err(inconsistent(format!("class labels {:?}", self.class_labels)));
        }
        let dim = self.normalization.feature_set.dim();
        if self.params.input_dim() != dim {
            return Err(inconsistent(format!(
                "feature set {} has {dim} features but the network takes {}",
                self.normalization.feature_set,
                self.params.input_dim()
            )));
        }
        if self.scaler.dim() != dim || self.scaler.std.len() != dim {
            return Err(inconsistent("scaler length differs from the feature dimension"));
        }
        if self.scaler.std.iter().any(|s| !(s.is_finite() && *s > 0.0)) || self.scaler.mean.iter().any(|m| !m.is_finite()) {
            return Err(inconsistent("scaler holds non-finite or non-positive values"));
        }
        if self.normalization.l_std < 2 {
            return Err(inconsistent("l_std must be at least 2"));
        }
        let c = &self.config;
        if self.params.layers.len() != c.num_layers
            || self.params.hidden_dim() != c.hidden_dim
            || self.params.bidirectional() != c.bidirectional
            || self.params.attention.is_some() != c.attention
        {
            return Err(inconsistent("weights do not match the stored architecture"));
        }
        if let Some(att) = &self.params.attention {
            if att.attention_dim() != c.attention_dim {
                return Err(inconsistent("attention width differs from the configuration"));
            }
        }
        if !self.params.is_finite() {
            return Err(inconsistent("weights contain non-finite values"));
        }
        for (name, block) in self.params.blocks() {
            if block.is_empty() {
                return Err(inconsistent(format!("block {name} is empty")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("artifacts always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let artifact: Self = serde_json::from_str(text)?;
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ArtifactError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ArtifactError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Rebuilds the classifier in its training precision.
    pub fn classifier(&self) -> Classifier {
        Classifier {
            config: self.config.clone(),
            scaler: self.scaler.clone(),
            weights: Weights::from_f64(&self.params, self.config.precision),
        }
    }

    /// `"<format>:<first 12 hex digits of SHA-256 over the weights>"`.
    pub fn model_version(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(&self.params).expect("weights serialize"));
        format!("{FORMAT_VERSION}:{}", &hex::encode(digest)[..12])
    }
}
