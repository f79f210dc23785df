//! From-scratch recurrent sequence classifier with analytic gradients.

pub mod attention;
pub mod config;
pub mod gradcheck;
pub mod lstm;
pub mod model;
pub mod optim;
pub mod params;
pub mod subnormal;

pub use config::{Precision, TrainConfig};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use model::{
    backward, cross_entropy_loss, forward_batch, loss_and_grads, model_forward, predict_batch,
    ForwardCache, SeqBatch,
};
pub use optim::{optimizer_step, AdamState};
pub use params::{init_params, AttentionParams, LstmDirection, LstmLayer, ModelParams};
