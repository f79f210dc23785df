//! Scaled dot-product self-attention over the recurrent states, followed by
//! mean pooling over time. Also the plain mean-pooling fallback used when
//! attention is switched off.

use ndarray::{s, Array2, ArrayView2, Axis, NdFloat};

use super::params::AttentionParams;

#[derive(Debug, Clone)]
pub struct AttentionCache<F> {
    pub input: Array2<F>,
    pub q: Array2<F>,
    pub k: Array2<F>,
    pub v: Array2<F>,
    /// One `n × n` row-stochastic weight matrix per sequence.
    pub weights: Vec<Array2<F>>,
}

pub struct AttentionGrads<F> {
    pub wq: Array2<F>,
    pub wk: Array2<F>,
    pub wv: Array2<F>,
}

pub(crate) fn softmax_rows<F: NdFloat>(scores: &mut Array2<F>) {
    for mut row in scores.rows_mut() {
        let max = row.fold(F::neg_infinity(), |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// `input` is time-major (`nB × d_in`). Returns the pooled `B × d_attn`
/// matrix.
pub fn attention_forward<F: NdFloat>(
    params: &AttentionParams<F>,
    input: Array2<F>,
    steps: usize,
    batch: usize,
) -> (Array2<F>, AttentionCache<F>) {
    let da = params.attention_dim();
    let scale = F::one() / F::from(da).unwrap().sqrt();
    let inv_n = F::one() / F::from(steps).unwrap();
    let q = input.dot(&params.wq);
    let k = input.dot(&params.wk);
    let v = input.dot(&params.wv);
    let mut pooled = Array2::zeros((batch, da));
    let mut weights = Vec::with_capacity(batch);
    for j in 0..batch {
        let qj = q.slice(s![j..;batch, ..]);
        let kj = k.slice(s![j..;batch, ..]);
        let vj = v.slice(s![j..;batch, ..]);
        let mut a = qj.dot(&kj.t());
        a.mapv_inplace(|x| x * scale);
        softmax_rows(&mut a);
        let mixed = a.dot(&vj);
        pooled
            .row_mut(j)
            .assign(&(mixed.sum_axis(Axis(0)) * inv_n));
        weights.push(a);
    }
    (
        pooled,
        AttentionCache {
            input,
            q,
            k,
            v,
            weights,
        },
    )
}

/// Returns parameter gradients and the gradient with respect to the input.
pub fn attention_backward<F: NdFloat>(
    params: &AttentionParams<F>,
    cache: &AttentionCache<F>,
    d_pooled: ArrayView2<F>,
    steps: usize,
    batch: usize,
) -> (AttentionGrads<F>, Array2<F>) {
    let da = params.attention_dim();
    let scale = F::one() / F::from(da).unwrap().sqrt();
    let inv_n = F::one() / F::from(steps).unwrap();
    let rows = steps * batch;
    let mut dq = Array2::zeros((rows, da));
    let mut dk = Array2::zeros((rows, da));
    let mut dv = Array2::zeros((rows, da));
    for j in 0..batch {
        let a = &cache.weights[j];
        let qj = cache.q.slice(s![j..;batch, ..]);
        let kj = cache.k.slice(s![j..;batch, ..]);
        let vj = cache.v.slice(s![j..;batch, ..]);
        // Every output row receives the same share of the pooled gradient.
        let row_grad = d_pooled.row(j).mapv(|x| x * inv_n);
        let d_mixed = row_grad
            .broadcast((steps, da))
            .expect("broadcast pooled gradient")
            .to_owned();
        let d_a = d_mixed.dot(&vj.t());
        dv.slice_mut(s![j..;batch, ..]).assign(&a.t().dot(&d_mixed));

        let mut d_scores = Array2::zeros((steps, steps));
        for i in 0..steps {
            let dot: F = (0..steps).fold(F::zero(), |acc, c| acc + a[[i, c]] * d_a[[i, c]]);
            for c in 0..steps {
                d_scores[[i, c]] = a[[i, c]] * (d_a[[i, c]] - dot) * scale;
            }
        }
        dq.slice_mut(s![j..;batch, ..]).assign(&d_scores.dot(&kj));
        dk.slice_mut(s![j..;batch, ..]).assign(&d_scores.t().dot(&qj));
    }
    let x = &cache.input;
    let grads = AttentionGrads {
        wq: x.t().dot(&dq),
        wk: x.t().dot(&dk),
        wv: x.t().dot(&dv),
    };
    let mut d_input = dq.dot(&params.wq.t());
    d_input += &dk.dot(&params.wk.t());
    d_input += &dv.dot(&params.wv.t());
    (grads, d_input)
}

/// Mean over time of each sequence's rows.
pub fn mean_pool<F: NdFloat>(input: ArrayView2<F>, steps: usize, batch: usize) -> Array2<F> {
    let inv_n = F::one() / F::from(steps).unwrap();
    let mut out = Array2::zeros((batch, input.ncols()));
    for t in 0..steps {
        out += &input.slice(s![t * batch..(t + 1) * batch, ..]);
    }
    out.mapv_inplace(|v| v * inv_n);
    out
}

pub fn mean_pool_backward<F: NdFloat>(d_pooled: ArrayView2<F>, steps: usize, batch: usize) -> Array2<F> {
    let inv_n = F::one() / F::from(steps).unwrap();
    let scaled = d_pooled.mapv(|v| v * inv_n);
    let mut out = Array2::zeros((steps * batch, d_pooled.ncols()));
    for t in 0..steps {
        out.slice_mut(s![t * batch..(t + 1) * batch, ..]).assign(&scaled);
    }
    out
}
