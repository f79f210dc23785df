//! Full classifier: stacked (bi)LSTM → attention or mean pooling → dropout →
//! dense head → softmax, with the matching backward pass.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, NdFloat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::attention::{self, AttentionCache};
use super::lstm::{self, LayerCache};
use super::params::{ModelParams, NUM_CLASSES};
use crate::error::ModelError;
use crate::trajectory::ScoreLabel;

pub const LOSS_EPSILON: f64 = 1e-12;

/// Equal-length sequences stacked time-major: row `t * batch + j`.
#[derive(Debug, Clone)]
pub struct SeqBatch<F> {
    pub x: Array2<F>,
    pub steps: usize,
    pub batch: usize,
}

impl<F: NdFloat> SeqBatch<F> {
    /// Each sequence is `steps × features`.
    pub fn from_sequences(seqs: &[ArrayView2<F>]) -> Result<Self, ModelError> {
        let first = seqs.first().ok_or(ModelError::EmptySequence)?;
        let (steps, d) = first.dim();
        if steps == 0 {
            return Err(ModelError::EmptySequence);
        }
        let batch = seqs.len();
        let mut x = Array2::zeros((steps * batch, d));
        for (j, s) in seqs.iter().enumerate() {
            if s.ncols() != d {
                return Err(ModelError::DimensionMismatch {
                    expected: d,
                    got: s.ncols(),
                });
            }
            if s.nrows() != steps {
                return Err(ModelError::EmptySequence);
            }
            for t in 0..steps {
                x.row_mut(t * batch + j).assign(&s.row(t));
            }
        }
        Ok(Self { x, steps, batch })
    }

    pub fn single(x: ArrayView2<F>) -> Result<Self, ModelError> {
        Self::from_sequences(&[x])
    }

    pub fn features(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardCache<F> {
    pub steps: usize,
    pub batch: usize,
    pub layers: Vec<LayerCache<F>>,
    /// Output of the last recurrent layer, `nB × width`.
    pub states: Array2<F>,
    pub attention: Option<AttentionCache<F>>,
    pub pooled: Array2<F>,
    /// Inverted-dropout multipliers, present only in training mode.
    pub mask: Option<Array2<F>>,
    pub head_input: Array2<F>,
    pub logits: Array2<F>,
    pub probs: Array2<F>,
}

fn softmax_row<F: NdFloat>(logits: ArrayView1<F>) -> Array1<F> {
    let max = logits.fold(F::neg_infinity(), |m, &v| m.max(v));
    let e = logits.mapv(|v| (v - max).exp());
    let sum = e.sum();
    e / sum
}

/// Batched forward pass. Dropout is drawn from `rng` only when `training`.
pub fn forward_batch<F: NdFloat, R: Rng + ?Sized>(
    params: &ModelParams<F>,
    batch: &SeqBatch<F>,
    training: bool,
    rng: &mut R,
) -> Result<ForwardCache<F>, ModelError> {
    if batch.features() != params.input_dim() {
        return Err(ModelError::DimensionMismatch {
            expected: params.input_dim(),
            got: batch.features(),
        });
    }
    let (steps, b) = (batch.steps, batch.batch);
    let mut layers = Vec::with_capacity(params.layers.len());
    let mut current = batch.x.clone();
    for layer in &params.layers {
        let cache = lstm::layer_forward(layer, current, steps, b);
        current = cache.output();
        layers.push(cache);
    }
    let states = current;

    let (pooled, attention) = match &params.attention {
        Some(ap) => {
            let (p, c) = attention::attention_forward(ap, states.clone(), steps, b);
            (p, Some(c))
        }
        None => (attention::mean_pool(states.view(), steps, b), None),
    };

    let rate = params.dropout_rate;
    let mask = (training && rate > 0.0).then(|| {
        let keep = 1.0 - rate;
        let scale = F::from(1.0 / keep).unwrap();
        Array2::from_shape_simple_fn(pooled.dim(), || {
            if rng.random::<f64>() < keep {
                scale
            } else {
                F::zero()
            }
        })
    });
    let head_input = match &mask {
        Some(m) => &pooled * m,
        None => pooled.clone(),
    };
    let mut logits = head_input.dot(&params.head.w);
    logits += &params.head.b;
    let mut probs = Array2::zeros(logits.dim());
    for (mut dst, row) in probs.rows_mut().into_iter().zip(logits.rows()) {
        dst.assign(&softmax_row(row));
    }
    Ok(ForwardCache {
        steps,
        batch: b,
        layers,
        states,
        attention,
        pooled,
        mask,
        head_input,
        logits,
        probs,
    })
}

/// Inference-mode forward pass; returns `B × 4` class probabilities.
pub fn predict_batch<F: NdFloat>(params: &ModelParams<F>, batch: &SeqBatch<F>) -> Result<Array2<F>, ModelError> {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    Ok(forward_batch(params, batch, false, &mut unused)?.probs)
}

/// Single-sequence forward pass on an `n × d` input.
pub fn model_forward<F: NdFloat, R: Rng + ?Sized>(
    x: ArrayView2<F>,
    params: &ModelParams<F>,
    training: bool,
    rng: &mut R,
) -> Result<(Array1<F>, Array1<F>, ForwardCache<F>), ModelError> {
    let batch = SeqBatch::single(x)?;
    let cache = forward_batch(params, &batch, training, rng)?;
    let logits = cache.logits.row(0).to_owned();
    let probs = cache.probs.row(0).to_owned();
    Ok((logits, probs, cache))
}

/// Recurrent stack only: returns the `n × width` state matrix for one sequence.
pub fn bilstm_forward<F: NdFloat>(x: ArrayView2<F>, params: &ModelParams<F>) -> Result<Array2<F>, ModelError> {
    let batch = SeqBatch::single(x)?;
    let mut current = batch.x;
    for layer in &params.layers {
        current = lstm::layer_forward(layer, current, batch.steps, 1).output();
    }
    Ok(current)
}

pub fn cross_entropy_loss<F: NdFloat>(probs: ArrayView1<F>, label: ScoreLabel) -> F {
    -(probs[label.index()] + F::from(LOSS_EPSILON).unwrap()).ln()
}

pub fn mean_loss<F: NdFloat>(probs: &Array2<F>, labels: &[ScoreLabel]) -> F {
    let total = probs
        .rows()
        .into_iter()
        .zip(labels)
        .fold(F::zero(), |acc, (p, &y)| acc + cross_entropy_loss(p, y));
    total / F::from(labels.len()).unwrap()
}

/// Gradient of the mean batch loss with respect to every parameter.
pub fn backward<F: NdFloat>(
    params: &ModelParams<F>,
    cache: &ForwardCache<F>,
    labels: &[ScoreLabel],
) -> ModelParams<F> {
    assert_eq!(labels.len(), cache.batch, "one label per sequence");
    let (steps, b) = (cache.steps, cache.batch);
    let eps = F::from(LOSS_EPSILON).unwrap();
    let inv_b = F::one() / F::from(b).unwrap();
    let mut grads = params.zeros_like();

    // d/dz of -ln(p_y + eps) with p = softmax(z).
    let mut d_logits = Array2::zeros((b, NUM_CLASSES));
    for (j, &y) in labels.iter().enumerate() {
        let p = cache.probs.row(j);
        let py = p[y.index()];
        let w = py / (py + eps) * inv_b;
        for k in 0..NUM_CLASSES {
            let target = if k == y.index() { F::one() } else { F::zero() };
            d_logits[[j, k]] = w * (p[k] - target);
        }
    }
    grads.head.w = cache.head_input.t().dot(&d_logits);
    grads.head.b = d_logits.sum_axis(Axis(0));
    let mut d_pooled = d_logits.dot(&params.head.w.t());
    if let Some(m) = &cache.mask {
        d_pooled *= m;
    }

    let mut d_states = match (&params.attention, &cache.attention) {
        (Some(ap), Some(ac)) => {
            let (g, d) = attention::attention_backward(ap, ac, d_pooled.view(), steps, b);
            let ga = grads.attention.as_mut().expect("attention grads");
            ga.wq = g.wq;
            ga.wk = g.wk;
            ga.wv = g.wv;
            d
        }
        _ => attention::mean_pool_backward(d_pooled.view(), steps, b),
    };

    for (k, (layer, lc)) in params.layers.iter().zip(&cache.layers).enumerate().rev() {
        let (gf, gb, d_in) = lstm::layer_backward(layer, lc, d_states.view(), steps, b);
        let gl = &mut grads.layers[k];
        gl.forward.w = gf.w;
        gl.forward.u = gf.u;
        gl.forward.b = gf.b;
        if let (Some(dst), Some(g)) = (gl.backward.as_mut(), gb) {
            dst.w = g.w;
            dst.u = g.u;
            dst.b = g.b;
        }
        d_states = d_in;
    }
    grads
}

/// Mean loss and its gradient for a labeled batch.
pub fn loss_and_grads<F: NdFloat, R: Rng + ?Sized>(
    params: &ModelParams<F>,
    batch: &SeqBatch<F>,
    labels: &[ScoreLabel],
    training: bool,
    rng: &mut R,
) -> Result<(F, ModelParams<F>, ForwardCache<F>), ModelError> {
    let cache = forward_batch(params, batch, training, rng)?;
    let loss = mean_loss(&cache.probs, labels);
    let grads = backward(params, &cache, labels);
    Ok((loss, grads, cache))
}

pub fn argmax<F: NdFloat>(row: ArrayView1<F>) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}
