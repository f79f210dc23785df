//! Mini-batch training with Adam, per-epoch curves, and inference wrappers.

use std::time::Instant;

use ndarray::{Array2, NdFloat};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::error::{ModelError, TrainError};
use crate::features::FeatureMatrix;
use crate::nn::model::{argmax, loss_and_grads, mean_loss, predict_batch, SeqBatch};
use crate::nn::subnormal::FlushSubnormals;
use crate::nn::{init_params, optimizer_step, AdamState, ModelParams, Precision, TrainConfig};
use crate::trajectory::ScoreLabel;

const INFERENCE_BATCH: usize = 64;

/// A feature matrix with its target score.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub matrix: FeatureMatrix,
    pub label: ScoreLabel,
}

/// Per-feature z-scoring fitted on training matrices and applied to every
/// model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(matrices: impl IntoIterator<Item = &'a FeatureMatrix>) -> Self {
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for m in matrices {
            if sum.is_empty() {
                sum = vec![0.0; m.dim()];
                sq = vec![0.0; m.dim()];
            }
            for (f, row) in m.values.rows().into_iter().enumerate() {
                sum[f] += row.sum();
                sq[f] += row.iter().map(|v| v * v).sum::<f64>();
            }
            count += m.l_std();
        }
        let n = count.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / n - m * m).max(0.0);
                let sd = var.sqrt();
                if sd > 1e-12 * (1.0 + m.abs()) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Standardized, transposed to `l_std × d` model input.
    pub fn transform<F: NdFloat>(&self, matrix: &FeatureMatrix) -> Array2<F> {
        let (d, n) = matrix.shape();
        Array2::from_shape_fn((n, d), |(t, f)| {
            F::from((matrix.values[[f, t]] - self.mean[f]) / self.std[f]).unwrap()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
    /// Wall-clock seconds; reported but never written to result files.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub test_metrics: Option<Metrics>,
}

impl TrainReport {
    /// `epoch,train_loss,train_acc,val_loss,val_acc`; validation columns are
    /// empty when there was no validation set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.6},{:.6},{},{}\n",
                e.epoch,
                e.train_loss,
                e.train_acc,
                opt(e.val_loss),
                opt(e.val_acc)
            ));
        }
        out
    }

    pub fn final_train_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_acc)
    }
}

/// Weights in the precision they were trained in.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    F32(ModelParams<f32>),
    F64(ModelParams<f64>),
}

impl Weights {
    pub fn to_f64(&self) -> ModelParams<f64> {
        match self {
            Weights::F32(p) => p.cast(),
            Weights::F64(p) => p.clone(),
        }
    }

    pub fn from_f64(params: &ModelParams<f64>, precision: Precision) -> Self {
        match precision {
            Precision::F32 => Weights::F32(params.cast()),
            Precision::F64 => Weights::F64(params.clone()),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Weights::F32(p) => p.input_dim(),
            Weights::F64(p) => p.input_dim(),
        }
    }
}

/// A trained network plus the input scaling it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub config: TrainConfig,
    pub scaler: Standardizer,
    pub weights: Weights,
}

fn probs_typed<F: NdFloat>(
    params: &ModelParams<F>,
    scaler: &Standardizer,
    matrices: &[&FeatureMatrix],
) -> Result<Vec<[f64; 4]>, ModelError> {
    let mut out = Vec::with_capacity(matrices.len());
    for chunk in matrices.chunks(INFERENCE_BATCH) {
        let inputs: Vec<Array2<F>> = chunk.iter().map(|m| scaler.transform(m)).collect();
        let views: Vec<_> = inputs.iter().map(|x| x.view()).collect();
        let probs = predict_batch(params, &SeqBatch::from_sequences(&views)?)?;
        for row in probs.rows() {
            let mut p = [0.0; 4];
            for (dst, v) in p.iter_mut().zip(row) {
                *dst = v.to_f64().unwrap();
            }
            out.push(p);
        }
    }
    Ok(out)
}

impl Classifier {
    pub fn predict_proba(&self, matrices: &[&FeatureMatrix]) -> Result<Vec<[f64; 4]>, ModelError> {
        if let Some(m) = matrices.iter().find(|m| m.dim() != self.weights.input_dim()) {
            return Err(ModelError::DimensionMismatch {
                expected: self.weights.input_dim(),
                got: m.dim(),
            });
        }
        let _flush = FlushSubnormals::new();
        match &self.weights {
            Weights::F32(p) => probs_typed(p, &self.scaler, matrices),
            Weights::F64(p) => probs_typed(p, &self.scaler, matrices),
        }
    }

    pub fn predict(&self, matrices: &[&FeatureMatrix]) -> Result<Vec<ScoreLabel>, ModelError> {
        Ok(self
            .predict_proba(matrices)?
            .iter()
            .map(|p| ScoreLabel::new(argmax(ndarray::ArrayView1::from(&p[..])) as u8).unwrap())
            .collect())
    }
}

fn check_shapes(train: &[Example], val: &[Example]) -> Result<(usize, usize), TrainError> {
    let first = train.first().ok_or(TrainError::EmptyTrainingSet)?;
    let expected = first.matrix.shape();
    for e in train.iter().chain(val) {
        if e.matrix.shape() != expected {
            return Err(TrainError::ShapeMismatch {
                expected,
                got: e.matrix.shape(),
            });
        }
    }
    Ok(expected)
}

fn train_typed<F: NdFloat>(
    train: &[Example],
    val: &[Example],
    config: &TrainConfig,
    scaler: &Standardizer,
    input_dim: usize,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ModelParams<F>, TrainReport), TrainError> {
    let mut params: ModelParams<F> = init_params(config, input_dim, config.seed);
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let inputs: Vec<Array2<F>> = train.iter().map(|e| scaler.transform(&e.matrix)).collect();
    let labels: Vec<ScoreLabel> = train.iter().map(|e| e.label).collect();
    let val_inputs: Vec<Array2<F>> = val.iter().map(|e| scaler.transform(&e.matrix)).collect();
    let val_labels: Vec<ScoreLabel> = val.iter().map(|e| e.label).collect();
    let batch_size = config.batch_size.max(1);

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TrainReport::default();
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(batch_size) {
            let views: Vec<_> = chunk.iter().map(|&i| inputs[i].view()).collect();
            let batch_labels: Vec<ScoreLabel> = chunk.iter().map(|&i| labels[i]).collect();
            let batch = SeqBatch::from_sequences(&views)?;
            let (loss, grads, cache) = loss_and_grads(&params, &batch, &batch_labels, true, &mut rng)?;
            optimizer_step(&mut params, &grads, &mut adam, config.learning_rate);
            loss_sum += loss.to_f64().unwrap() * chunk.len() as f64;
            correct += cache
                .probs
                .rows()
                .into_iter()
                .zip(&batch_labels)
                .filter(|(p, y)| argmax(*p) == y.index())
                .count();
        }
        let (val_loss, val_acc) = if val.is_empty() {
            (None, None)
        } else {
            let (l, a) = evaluate_inputs(&params, &val_inputs, &val_labels)?;
            (Some(l), Some(a))
        };
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_loss,
            val_acc,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&stats);
        report.epochs.push(stats);
    }
    Ok((params, report))
}

fn evaluate_inputs<F: NdFloat>(
    params: &ModelParams<F>,
    inputs: &[Array2<F>],
    labels: &[ScoreLabel],
) -> Result<(f64, f64), ModelError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (xs, ys) in inputs.chunks(INFERENCE_BATCH).zip(labels.chunks(INFERENCE_BATCH)) {
        let views: Vec<_> = xs.iter().map(|x| x.view()).collect();
        let probs = predict_batch(params, &SeqBatch::from_sequences(&views)?)?;
        loss += mean_loss(&probs, ys).to_f64().unwrap() * ys.len() as f64;
        correct += probs
            .rows()
            .into_iter()
            .zip(ys)
            .filter(|(p, y)| argmax(*p) == y.index())
            .count();
    }
    Ok((loss / labels.len() as f64, correct as f64 / labels.len() as f64))
}

/// Trains for exactly `config.epochs` epochs and returns the final weights.
pub fn train_model(
    train: &[Example],
    val: &[Example],
    config: &TrainConfig,
) -> Result<(Classifier, TrainReport), TrainError> {
    train_model_with_progress(train, val, config, |_| {})
}

pub fn train_model_with_progress(
    train: &[Example],
    val: &[Example],
    config: &TrainConfig,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(Classifier, TrainReport), TrainError> {
    let (input_dim, _) = check_shapes(train, val)?;
    let scaler = Standardizer::fit(train.iter().map(|e| &e.matrix));
    let _flush = FlushSubnormals::new();
    let (weights, report) = match config.precision {
        Precision::F32 => {
            let (p, r) = train_typed::<f32>(train, val, config, &scaler, input_dim, on_epoch)?;
            (Weights::F32(p), r)
        }
        Precision::F64 => {
            let (p, r) = train_typed::<f64>(train, val, config, &scaler, input_dim, on_epoch)?;
            (Weights::F64(p), r)
        }
    };
    Ok((
        Classifier {
            config: config.clone(),
            scaler,
            weights,
        },
        report,
    ))
}

pub fn evaluate(model: &Classifier, samples: &[Example]) -> Result<Metrics, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyEvalSet);
    }
    let matrices: Vec<&FeatureMatrix> = samples.iter().map(|e| &e.matrix).collect();
    let predicted = model.predict(&matrices)?;
    let truth: Vec<ScoreLabel> = samples.iter().map(|e| e.label).collect();
    Ok(Metrics::from_predictions(&truth, &predicted))
}
