//! Adam with bias correction.

use ndarray::NdFloat;

use super::params::ModelParams;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub m: ModelParams<F>,
    pub v: ModelParams<F>,
    pub step: u32,
}

impl<F: NdFloat> AdamState<F> {
    pub fn new(params: &ModelParams<F>) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }
}

/// Applies one Adam update in place.
pub fn optimizer_step<F: NdFloat>(
    params: &mut ModelParams<F>,
    grads: &ModelParams<F>,
    state: &mut AdamState<F>,
    lr: f64,
) {
    state.step += 1;
    let b1 = F::from(BETA1).unwrap();
    let b2 = F::from(BETA2).unwrap();
    let one = F::one();
    let c1 = one - F::from(BETA1.powi(state.step as i32)).unwrap();
    let c2 = one - F::from(BETA2.powi(state.step as i32)).unwrap();
    let lr = F::from(lr).unwrap();
    let eps = F::from(EPSILON).unwrap();

    let g_blocks = grads.blocks();
    let mut m_blocks = state.m.blocks_mut();
    let mut v_blocks = state.v.blocks_mut();
    for (k, (_, mut p)) in params.blocks_mut().into_iter().enumerate() {
        let g = &g_blocks[k].1;
        let m = &mut m_blocks[k].1;
        let v = &mut v_blocks[k].1;
        debug_assert_eq!(p.shape(), g.shape());
        ndarray::Zip::from(&mut p)
            .and(g)
            .and(m)
            .and(v)
            .for_each(|p, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            });
    }
}
