use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision `{other}` (expected f32 or f64)")),
        }
    }
}

/// Architecture and optimization settings.
///
/// Defaults: 2 stacked layers, hidden 128, attention 256, learning rate 0.005,
/// 100 epochs, batch 16, dropout 0.3, f32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub attention_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    pub precision: Precision,
    #[serde(default = "yes")]
    pub bidirectional: bool,
    /// When off, the attention block is replaced by mean pooling over time.
    #[serde(default = "yes")]
    pub attention: bool,
}

fn yes() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_layers: 2,
            hidden_dim: 128,
            attention_dim: 256,
            learning_rate: 0.005,
            epochs: 100,
            batch_size: 16,
            dropout_rate: 0.3,
            seed: 0,
            precision: Precision::F32,
            bidirectional: true,
            attention: true,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Short architecture name in the style "BiLSTM-Attention".
    pub fn architecture_name(&self) -> String {
        let rnn = if self.bidirectional { "BiLSTM" } else { "LSTM" };
        if self.attention {
            format!("{rnn}-Attention")
        } else {
            rnn.to_string()
        }
    }
}
