//! Central finite-difference verification of the analytic gradients.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::TrainConfig;
use super::model::{forward_batch, loss_and_grads, mean_loss, SeqBatch};
use super::params::{init_params, ModelParams};
use crate::trajectory::ScoreLabel;

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockError {
    pub block: String,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    /// Largest analytic gradient magnitude in the block.
    pub max_gradient: f64,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockError>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.blocks.iter().all(|b| b.max_relative_error < tolerance)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// A small random labeled problem for checking.
pub fn random_problem(
    input_dim: usize,
    steps: usize,
    batch: usize,
    seed: u64,
) -> (SeqBatch<f64>, Vec<ScoreLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let seqs: Vec<Array2<f64>> = (0..batch)
        .map(|_| Array2::from_shape_simple_fn((steps, input_dim), || rng.sample(StandardNormal)))
        .collect();
    let views: Vec<_> = seqs.iter().map(|s| s.view()).collect();
    let labels = (0..batch)
        .map(|_| ScoreLabel::new(rng.random_range(0..4)).unwrap())
        .collect();
    (SeqBatch::from_sequences(&views).unwrap(), labels)
}

fn loss_at(params: &ModelParams<f64>, batch: &SeqBatch<f64>, labels: &[ScoreLabel]) -> f64 {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let cache = forward_batch(params, batch, false, &mut unused).expect("valid batch");
    mean_loss(&cache.probs, labels)
}

/// Compares analytic and central-difference gradients on the blocks whose
/// names satisfy `select`.
pub fn check_blocks(
    params: &ModelParams<f64>,
    batch: &SeqBatch<f64>,
    labels: &[ScoreLabel],
    select: impl Fn(&str) -> bool,
) -> GradCheckReport {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let (_, analytic, _) = loss_and_grads(params, batch, labels, false, &mut unused).expect("valid batch");
    let analytic_blocks = analytic.blocks();
    let mut work = params.clone();
    let mut blocks = Vec::new();
    let names: Vec<String> = params.blocks().into_iter().map(|(n, _)| n).collect();
    for (k, name) in names.iter().enumerate() {
        if !select(name) {
            continue;
        }
        let ga: Vec<f64> = analytic_blocks[k].1.iter().copied().collect();
        let mut worst = 0.0f64;
        let mut worst_abs = 0.0f64;
        for (idx, &g) in ga.iter().enumerate() {
            let original = nth(&mut work, k, idx, None);
            nth(&mut work, k, idx, Some(original + FD_STEP));
            let up = loss_at(&work, batch, labels);
            nth(&mut work, k, idx, Some(original - FD_STEP));
            let down = loss_at(&work, batch, labels);
            nth(&mut work, k, idx, Some(original));
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(g, numeric));
            worst_abs = worst_abs.max((g - numeric).abs());
        }
        blocks.push(BlockError {
            block: name.clone(),
            max_relative_error: worst,
            max_absolute_error: worst_abs,
            max_gradient: ga.iter().fold(0.0, |m, g| m.max(g.abs())),
            checked: ga.len(),
        });
    }
    GradCheckReport { blocks }
}

fn nth(params: &mut ModelParams<f64>, block: usize, idx: usize, set: Option<f64>) -> f64 {
    let mut blocks = params.blocks_mut();
    let slot = blocks[block].1.iter_mut().nth(idx).expect("index in block");
    if let Some(v) = set {
        *slot = v;
    }
    *slot
}

/// Full check on a freshly initialized model with dropout disabled:
/// `steps` time steps and a batch of 3 random sequences.
pub fn gradient_check(config: &TrainConfig, input_dim: usize, steps: usize, seed: u64) -> GradCheckReport {
    let cfg = TrainConfig {
        dropout_rate: 0.0,
        ..config.clone()
    };
    let params: ModelParams<f64> = init_params(&cfg, input_dim, seed);
    let (batch, labels) = random_problem(input_dim, steps, 3, seed);
    check_blocks(&params, &batch, &labels, |_| true)
}
