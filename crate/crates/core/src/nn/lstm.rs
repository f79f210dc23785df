//! LSTM cells and batched bidirectional scans with backpropagation through
//! time.
//!
//! Batched sequences are stored time-major in a single matrix: row `t * B + j`
//! holds step `t` of sequence `j`. Every sequence in a batch has the same
//! length.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, NdFloat};

use super::params::{LstmDirection, LstmLayer};

pub(crate) fn sigmoid<F: NdFloat>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// One step of a single sequence: returns `(h_t, c_t)`.
pub fn lstm_cell_forward<F: NdFloat>(
    x_t: ArrayView1<F>,
    h_prev: ArrayView1<F>,
    c_prev: ArrayView1<F>,
    params: &LstmDirection<F>,
) -> (Array1<F>, Array1<F>) {
    let h = params.hidden_dim();
    let z = params.w.dot(&x_t) + params.u.dot(&h_prev) + &params.b;
    let mut h_t = Array1::zeros(h);
    let mut c_t = Array1::zeros(h);
    for k in 0..h {
        let i = sigmoid(z[k]);
        let f = sigmoid(z[h + k]);
        let g = z[2 * h + k].tanh();
        let o = sigmoid(z[3 * h + k]);
        c_t[k] = f * c_prev[k] + i * g;
        h_t[k] = o * c_t[k].tanh();
    }
    (h_t, c_t)
}

/// Activations of one direction over a batch.
#[derive(Debug, Clone)]
pub struct DirectionCache<F> {
    pub reverse: bool,
    /// Activated gates `(i, f, g, o)`, `nB × 4h`.
    pub gates: Array2<F>,
    pub c: Array2<F>,
    pub tanh_c: Array2<F>,
    pub h: Array2<F>,
}

#[derive(Debug, Clone)]
pub struct LayerCache<F> {
    pub input: Array2<F>,
    pub forward: DirectionCache<F>,
    pub backward: Option<DirectionCache<F>>,
}

pub struct DirectionGrads<F> {
    pub w: Array2<F>,
    pub u: Array2<F>,
    pub b: Array1<F>,
}

fn prev_step(t: usize, step: usize, reverse: bool) -> Option<usize> {
    if step == 0 {
        None
    } else if reverse {
        Some(t + 1)
    } else {
        Some(t - 1)
    }
}

pub fn direction_forward<F: NdFloat>(
    params: &LstmDirection<F>,
    input: ArrayView2<F>,
    steps: usize,
    batch: usize,
    reverse: bool,
) -> DirectionCache<F> {
    let h = params.hidden_dim();
    let rows = steps * batch;
    debug_assert_eq!(input.nrows(), rows);

    let mut gates = input.dot(&params.w.t());
    gates += &params.b;
    let mut c = Array2::zeros((rows, h));
    let mut tanh_c = Array2::zeros((rows, h));
    let mut hs = Array2::zeros((rows, h));
    let mut h_prev = Array2::<F>::zeros((batch, h));
    let mut c_prev = Array2::<F>::zeros((batch, h));

    for step in 0..steps {
        let t = if reverse { steps - 1 - step } else { step };
        let r0 = t * batch;
        let mut z = gates.slice_mut(s![r0..r0 + batch, ..]);
        if step > 0 {
            general_mat_mul(F::one(), &h_prev, &params.u.t(), F::one(), &mut z);
        }
        for j in 0..batch {
            for k in 0..h {
                let i = sigmoid(z[[j, k]]);
                let f = sigmoid(z[[j, h + k]]);
                let g = z[[j, 2 * h + k]].tanh();
                let o = sigmoid(z[[j, 3 * h + k]]);
                z[[j, k]] = i;
                z[[j, h + k]] = f;
                z[[j, 2 * h + k]] = g;
                z[[j, 3 * h + k]] = o;
                let cv = f * c_prev[[j, k]] + i * g;
                let tc = cv.tanh();
                let hv = o * tc;
                c_prev[[j, k]] = cv;
                h_prev[[j, k]] = hv;
                c[[r0 + j, k]] = cv;
                tanh_c[[r0 + j, k]] = tc;
                hs[[r0 + j, k]] = hv;
            }
        }
    }
    DirectionCache {
        reverse,
        gates,
        c,
        tanh_c,
        h: hs,
    }
}

/// Backpropagation through time for one direction. `d_h` is the gradient of
/// the loss with respect to this direction's outputs. Returns parameter
/// gradients and the gradient with respect to the input.
pub fn direction_backward<F: NdFloat>(
    params: &LstmDirection<F>,
    input: ArrayView2<F>,
    cache: &DirectionCache<F>,
    d_h: ArrayView2<F>,
    steps: usize,
    batch: usize,
) -> (DirectionGrads<F>, Array2<F>) {
    let h = params.hidden_dim();
    let rows = steps * batch;
    let one = F::one();
    let mut d_gates = Array2::<F>::zeros((rows, 4 * h));
    let mut h_prev_all = Array2::<F>::zeros((rows, h));
    let mut dh_next = Array2::<F>::zeros((batch, h));
    let mut dc_next = Array2::<F>::zeros((batch, h));

    for step in (0..steps).rev() {
        let t = if cache.reverse { steps - 1 - step } else { step };
        let prev = prev_step(t, step, cache.reverse);
        let r0 = t * batch;
        for j in 0..batch {
            let row = r0 + j;
            for k in 0..h {
                let i = cache.gates[[row, k]];
                let f = cache.gates[[row, h + k]];
                let g = cache.gates[[row, 2 * h + k]];
                let o = cache.gates[[row, 3 * h + k]];
                let tc = cache.tanh_c[[row, k]];
                let c_prev = prev.map_or(F::zero(), |p| cache.c[[p * batch + j, k]]);
                if let Some(p) = prev {
                    h_prev_all[[row, k]] = cache.h[[p * batch + j, k]];
                }

                let dh = d_h[[row, k]] + dh_next[[j, k]];
                let dc = dh * o * (one - tc * tc) + dc_next[[j, k]];
                let d_o = dh * tc;
                let d_i = dc * g;
                let d_f = dc * c_prev;
                let d_g = dc * i;
                dc_next[[j, k]] = dc * f;

                d_gates[[row, k]] = d_i * i * (one - i);
                d_gates[[row, h + k]] = d_f * f * (one - f);
                d_gates[[row, 2 * h + k]] = d_g * (one - g * g);
                d_gates[[row, 3 * h + k]] = d_o * o * (one - o);
            }
        }
        let dz = d_gates.slice(s![r0..r0 + batch, ..]);
        general_mat_mul(one, &dz, &params.u, F::zero(), &mut dh_next);
    }

    let grads = DirectionGrads {
        w: d_gates.t().dot(&input),
        u: d_gates.t().dot(&h_prev_all),
        b: d_gates.sum_axis(Axis(0)),
    };
    let d_input = d_gates.dot(&params.w);
    (grads, d_input)
}

pub fn layer_forward<F: NdFloat>(
    layer: &LstmLayer<F>,
    input: Array2<F>,
    steps: usize,
    batch: usize,
) -> LayerCache<F> {
    let forward = direction_forward(&layer.forward, input.view(), steps, batch, false);
    let backward = layer
        .backward
        .as_ref()
        .map(|p| direction_forward(p, input.view(), steps, batch, true));
    LayerCache {
        input,
        forward,
        backward,
    }
}

impl<F: NdFloat> LayerCache<F> {
    /// Concatenated `[forward h_t, backward h_t]` per row.
    pub fn output(&self) -> Array2<F> {
        match &self.backward {
            None => self.forward.h.clone(),
            Some(b) => ndarray::concatenate(Axis(1), &[self.forward.h.view(), b.h.view()])
                .expect("matching row counts"),
        }
    }
}

/// Gradients for both directions of a layer plus the gradient with respect to
/// the layer input.
pub fn layer_backward<F: NdFloat>(
    layer: &LstmLayer<F>,
    cache: &LayerCache<F>,
    d_out: ArrayView2<F>,
    steps: usize,
    batch: usize,
) -> (DirectionGrads<F>, Option<DirectionGrads<F>>, Array2<F>) {
    let h = layer.forward.hidden_dim();
    let (gf, mut dx) = direction_backward(
        &layer.forward,
        cache.input.view(),
        &cache.forward,
        d_out.slice(s![.., 0..h]),
        steps,
        batch,
    );
    let gb = match (&layer.backward, &cache.backward) {
        (Some(p), Some(c)) => {
            let (g, dxb) =
                direction_backward(p, cache.input.view(), c, d_out.slice(s![.., h..2 * h]), steps, batch);
            dx += &dxb;
            Some(g)
        }
        _ => None,
    };
    (gf, gb, dx)
}
