use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubescore_core::nn::{Precision, TrainConfig};
use cubescore_core::FeatureSet;

pub const MODEL_ENV: &str = "CUBESCORE_MODEL";

#[derive(Debug, Parser)]
#[command(name = "cubescore", version, about = "Score cube copying drawings from pen trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a JSON-lines trajectory file into feature matrices.
    Extract(ExtractArgs),
    /// Train a model on a labeled dataset.
    Train(TrainArgs),
    /// Evaluate a saved model on a labeled dataset.
    Eval(EvalArgs),
    /// Run the feature set by architecture grid.
    Ablate(AblateArgs),
    /// Score one trajectory.
    Score(ScoreArgs),
    /// Generate a labeled synthetic dataset.
    Synth(SynthArgs),
    /// Score distributions and correlations for a scored cohort.
    Stats(StatsArgs),
    /// Serve the scoring HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Target segment count; defaults to the mean segment count of the input.
    #[arg(long, conflicts_with = "model")]
    pub l_std: Option<usize>,
    #[arg(long, default_value = "SCSM", conflicts_with = "model")]
    pub feature_set: FeatureSet,
    /// Rescale coordinates to the unit box before extraction.
    #[arg(long, conflicts_with = "model")]
    pub normalize_xy: bool,
    /// Use the normalization stored in this model instead of the flags above.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// Network and optimizer settings shared by the training commands.
#[derive(Debug, Clone, Args)]
pub struct ModelFlags {
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 128)]
    pub hidden_dim: usize,
    #[arg(long, default_value_t = 256)]
    pub attention_dim: usize,
    #[arg(long, default_value_t = 0.005)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.3)]
    pub dropout: f64,
    #[arg(long, default_value = "f32")]
    pub precision: Precision,
    /// Forward-only recurrent layers.
    #[arg(long)]
    pub unidirectional: bool,
    /// Mean pooling instead of self-attention.
    #[arg(long)]
    pub no_attention: bool,
}

impl ModelFlags {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            num_layers: self.layers,
            hidden_dim: self.hidden_dim,
            attention_dim: self.attention_dim,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            dropout_rate: self.dropout,
            seed,
            precision: self.precision,
            bidirectional: !self.unidirectional,
            attention: !self.no_attention,
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitFlags {
    /// Seed of the stratified 8:1:1 split; defaults to --seed.
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub normalize_xy: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(short, long)]
    pub data: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Directory receiving model.json, train_report.csv and metrics.json.
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, default_value = "SCSM")]
    pub feature_set: FeatureSet,
    #[command(flatten)]
    pub split: SplitFlags,
    /// Also run K-fold cross-validation on the training and validation pool.
    #[arg(long, value_name = "K")]
    pub cv: Option<usize>,
    #[arg(short, long)]
    pub quiet: bool,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    Train,
    Validate,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(short, long, env = MODEL_ENV)]
    pub model: PathBuf,
    #[arg(short, long)]
    pub data: PathBuf,
    /// Split seed used at training time; required unless --subset all.
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Subset::Test)]
    pub subset: Subset,
    /// Also report a k-nearest-neighbour baseline fitted on the training part.
    #[arg(long, value_name = "K")]
    pub knn: Option<usize>,
    /// Metrics JSON destination; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(short, long)]
    pub data: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub split: SplitFlags,
    /// CSV destination.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Optional aligned text table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(short, long)]
    pub quiet: bool,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(short, long, env = MODEL_ENV)]
    pub model: PathBuf,
    /// Trajectory JSON file; standard input when absent or `-`.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, conflicts_with = "total")]
    pub per_class: Option<usize>,
    /// Total size, split across classes in the reference proportions.
    #[arg(long)]
    pub total: Option<usize>,
    /// JSON generator configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Switch off all jitter and noise.
    #[arg(long)]
    pub noiseless: bool,
    /// Leave subject metadata empty.
    #[arg(long)]
    pub no_meta: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Scored JSON-lines dataset (the label holds the score).
    #[arg(short, long)]
    pub data: PathBuf,
    /// Directory receiving distribution_*.csv and correlations.csv.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(short, long, env = MODEL_ENV)]
    pub model: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Allowed browser origin; repeatable. Any origin when omitted.
    #[arg(long = "cors-origin")]
    pub cors_origins: Vec<String>,
}
