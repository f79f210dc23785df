use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, NdFloat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::trajectory::ScoreLabel;

pub const NUM_CLASSES: usize = ScoreLabel::NUM_CLASSES;

/// Weights of one LSTM scan direction. Gate blocks are stacked in the order
/// input, forget, cell, output along the first axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmDirection<F> {
    /// `4h × d_in`
    pub w: Array2<F>,
    /// `4h × h`
    pub u: Array2<F>,
    /// `4h`
    pub b: Array1<F>,
}

impl<F: NdFloat> LstmDirection<F> {
    pub fn hidden_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer<F> {
    pub forward: LstmDirection<F>,
    pub backward: Option<LstmDirection<F>>,
}

impl<F: NdFloat> LstmLayer<F> {
    pub fn output_dim(&self) -> usize {
        let h = self.forward.hidden_dim();
        if self.backward.is_some() {
            2 * h
        } else {
            h
        }
    }
}

/// Query/key/value projections, each `d_in × d_attn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams<F> {
    pub wq: Array2<F>,
    pub wk: Array2<F>,
    pub wv: Array2<F>,
}

impl<F: NdFloat> AttentionParams<F> {
    pub fn attention_dim(&self) -> usize {
        self.wq.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams<F> {
    /// `d_in × 4`
    pub w: Array2<F>,
    pub b: Array1<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<F> {
    pub layers: Vec<LstmLayer<F>>,
    pub attention: Option<AttentionParams<F>>,
    pub head: HeadParams<F>,
    pub dropout_rate: f64,
}

fn glorot<F: NdFloat, R: Rng>(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<F> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || {
        F::from(rng.random_range(-bound..=bound)).unwrap()
    })
}

fn init_direction<F: NdFloat, R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> LstmDirection<F> {
    let w = glorot(4 * hidden, input_dim, input_dim, 4 * hidden, rng);
    let u = glorot(4 * hidden, hidden, hidden, 4 * hidden, rng);
    let mut b = Array1::zeros(4 * hidden);
    b.slice_mut(ndarray::s![hidden..2 * hidden]).fill(F::one());
    LstmDirection { w, u, b }
}

/// Seeded Glorot-uniform initialization; biases zero except the forget gate
/// (1.0).
pub fn init_params<F: NdFloat>(config: &TrainConfig, input_dim: usize, rng_seed: u64) -> ModelParams<F> {
    assert!(input_dim > 0 && config.hidden_dim > 0 && config.num_layers > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let h = config.hidden_dim;
    let mut layers = Vec::with_capacity(config.num_layers);
    let mut d_in = input_dim;
    for _ in 0..config.num_layers {
        let forward = init_direction(d_in, h, &mut rng);
        let backward = config.bidirectional.then(|| init_direction(d_in, h, &mut rng));
        let layer = LstmLayer { forward, backward };
        d_in = layer.output_dim();
        layers.push(layer);
    }
    let attention = config.attention.then(|| {
        let da = config.attention_dim;
        AttentionParams {
            wq: glorot(d_in, da, d_in, da, &mut rng),
            wk: glorot(d_in, da, d_in, da, &mut rng),
            wv: glorot(d_in, da, d_in, da, &mut rng),
        }
    });
    let head_in = if config.attention { config.attention_dim } else { d_in };
    let head = HeadParams {
        w: glorot(head_in, NUM_CLASSES, head_in, NUM_CLASSES, &mut rng),
        b: Array1::zeros(NUM_CLASSES),
    };
    ModelParams {
        layers,
        attention,
        head,
        dropout_rate: config.dropout_rate,
    }
}

impl<F: NdFloat> ModelParams<F> {
    pub fn input_dim(&self) -> usize {
        self.layers[0].forward.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].forward.hidden_dim()
    }

    pub fn bidirectional(&self) -> bool {
        self.layers[0].backward.is_some()
    }

    /// Same shapes, all zeros; used for gradients and optimizer moments.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for (_, mut block) in out.blocks_mut() {
            block.fill(F::zero());
        }
        out
    }

    /// Named views of every parameter tensor in a fixed order.
    pub fn blocks(&self) -> Vec<(String, ArrayViewD<'_, F>)> {
        let mut out = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            let dirs = std::iter::once(("fwd", &layer.forward))
                .chain(layer.backward.as_ref().map(|d| ("bwd", d)));
            for (tag, d) in dirs {
                out.push((format!("layer{k}.{tag}.w"), d.w.view().into_dyn()));
                out.push((format!("layer{k}.{tag}.u"), d.u.view().into_dyn()));
                out.push((format!("layer{k}.{tag}.b"), d.b.view().into_dyn()));
            }
        }
        if let Some(a) = &self.attention {
            out.push(("attention.wq".into(), a.wq.view().into_dyn()));
            out.push(("attention.wk".into(), a.wk.view().into_dyn()));
            out.push(("attention.wv".into(), a.wv.view().into_dyn()));
        }
        out.push(("head.w".into(), self.head.w.view().into_dyn()));
        out.push(("head.b".into(), self.head.b.view().into_dyn()));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, F>)> {
        let mut out = Vec::new();
        for (k, layer) in self.layers.iter_mut().enumerate() {
            let dirs = std::iter::once(("fwd", &mut layer.forward))
                .chain(layer.backward.as_mut().map(|d| ("bwd", d)));
            for (tag, d) in dirs {
                out.push((format!("layer{k}.{tag}.w"), d.w.view_mut().into_dyn()));
                out.push((format!("layer{k}.{tag}.u"), d.u.view_mut().into_dyn()));
                out.push((format!("layer{k}.{tag}.b"), d.b.view_mut().into_dyn()));
            }
        }
        if let Some(a) = &mut self.attention {
            out.push(("attention.wq".into(), a.wq.view_mut().into_dyn()));
            out.push(("attention.wk".into(), a.wk.view_mut().into_dyn()));
            out.push(("attention.wv".into(), a.wv.view_mut().into_dyn()));
        }
        out.push(("head.w".into(), self.head.w.view_mut().into_dyn()));
        out.push(("head.b".into(), self.head.b.view_mut().into_dyn()));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|(_, b)| b.iter().all(|v| v.is_finite()))
    }

    /// Converts every tensor to another float type.
    pub fn cast<G: NdFloat>(&self) -> ModelParams<G> {
        fn c2<F: NdFloat, G: NdFloat>(a: &Array2<F>) -> Array2<G> {
            a.mapv(|v| G::from(v).unwrap())
        }
        fn c1<F: NdFloat, G: NdFloat>(a: &Array1<F>) -> Array1<G> {
            a.mapv(|v| G::from(v).unwrap())
        }
        let dir = |d: &LstmDirection<F>| LstmDirection {
            w: c2(&d.w),
            u: c2(&d.u),
            b: c1(&d.b),
        };
        ModelParams {
            layers: self
                .layers
                .iter()
                .map(|l| LstmLayer {
                    forward: dir(&l.forward),
                    backward: l.backward.as_ref().map(dir),
                })
                .collect(),
            attention: self.attention.as_ref().map(|a| AttentionParams {
                wq: c2(&a.wq),
                wk: c2(&a.wk),
                wv: c2(&a.wv),
            }),
            head: HeadParams {
                w: c2(&self.head.w),
                b: c1(&self.head.b),
            },
            dropout_rate: self.dropout_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrainConfig {
        TrainConfig {
            hidden_dim: 5,
            attention_dim: 7,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a: ModelParams<f64> = init_params(&small(), 14, 3);
        let b: ModelParams<f64> = init_params(&small(), 14, 3);
        let c: ModelParams<f64> = init_params(&small(), 14, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn shapes_and_forget_bias() {
        let p: ModelParams<f32> = init_params(&small(), 14, 0);
        assert_eq!(p.layers.len(), 2);
        assert_eq!(p.layers[0].forward.w.dim(), (20, 14));
        assert_eq!(p.layers[1].forward.w.dim(), (20, 10));
        assert_eq!(p.layers[1].backward.as_ref().unwrap().u.dim(), (20, 5));
        assert_eq!(p.attention.as_ref().unwrap().wq.dim(), (10, 7));
        assert_eq!(p.head.w.dim(), (7, 4));
        for layer in &p.layers {
            for d in std::iter::once(&layer.forward).chain(layer.backward.as_ref()) {
                for (k, v) in d.b.iter().enumerate() {
                    let want = if (5..10).contains(&k) { 1.0 } else { 0.0 };
                    assert_eq!(*v, want);
                }
            }
        }
    }

    #[test]
    fn weights_within_glorot_bound() {
        let p: ModelParams<f64> = init_params(&small(), 14, 11);
        let check = |w: &Array2<f64>, fan_in: usize, fan_out: usize| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= bound));
        };
        check(&p.layers[0].forward.w, 14, 20);
        check(&p.layers[0].forward.u, 5, 20);
        check(&p.layers[1].forward.w, 10, 20);
        let a = p.attention.as_ref().unwrap();
        check(&a.wq, 10, 7);
        check(&p.head.w, 7, 4);
    }

    #[test]
    fn unidirectional_without_attention() {
        let cfg = TrainConfig {
            bidirectional: false,
            attention: false,
            ..small()
        };
        let p: ModelParams<f64> = init_params(&cfg, 2, 0);
        assert!(p.layers.iter().all(|l| l.backward.is_none()));
        assert!(p.attention.is_none());
        assert_eq!(p.head.w.dim(), (5, 4));
    }

    #[test]
    fn cast_round_trip_is_exact() {
        let p: ModelParams<f32> = init_params(&small(), 3, 1);
        let back: ModelParams<f32> = p.cast::<f64>().cast();
        assert_eq!(p, back);
    }

    #[test]
    fn block_names_are_unique() {
        let p: ModelParams<f64> = init_params(&small(), 3, 1);
        let names: std::collections::HashSet<_> = p.blocks().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), p.blocks().len());
        assert_eq!(p.zeros_like().num_parameters(), p.num_parameters());
    }
}
