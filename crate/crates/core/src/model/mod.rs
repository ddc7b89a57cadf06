//! Twin encoder + projection head, contrastive losses with exact gradients,
//! the Adam/SGD optimizers, and the training loop.

mod adam;
mod forward;
mod grad;
mod loss;
mod train;

pub use adam::{adam_step, sgd_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use forward::{encode, forward_cached, ForwardCache};
pub use grad::{backward, backward_from_encoder};
pub use loss::{info_nce, loss_value, loss_with_grad, similarity, supcon, supcon_mod, LossGrad};
pub use train::{train, TrainHistory};

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSchema;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::representation::RepresentationParams;
use crate::rng::{self, standard_normal, tag};
use crate::scalar::Scalar;

/// Contrastive loss variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// InfoNCE over in-batch negatives.
    #[serde(rename = "self")]
    SelfSupervised,
    /// Label-aware positives, full denominator.
    #[serde(rename = "sup")]
    Supervised,
    /// Label-aware positives, denominator restricted to other-class entries.
    #[serde(rename = "sup_mod")]
    SupervisedMod,
}

impl LossKind {
    pub fn needs_labels(self) -> bool {
        !matches!(self, LossKind::SelfSupervised)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Encoder/head sizing: `d` is the per-category representation width, the
/// user representation is `4*d`, and `out_dim` is the projection width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d: usize,
    pub out_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { d: 64, out_dim: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub temperature: f64,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            epochs: 5000,
            learning_rate: 0.001,
            temperature: 1.0,
            loss: LossKind::SelfSupervised,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 4 {
            return Err(Error::config(format!(
                "batch_size must be at least 4, got {}",
                self.batch_size
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::config("temperature must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// All trainable tensors: the four representation blocks, two encoder
/// layers, and the projection head. Doubles as the gradient container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<S> {
    pub rep: RepresentationParams<S>,
    pub enc_w1: Matrix<S>,
    pub enc_b1: Vec<S>,
    pub enc_w2: Matrix<S>,
    pub enc_b2: Vec<S>,
    pub head_w: Matrix<S>,
    pub head_b: Vec<S>,
}

/// Gradients share the parameter layout.
pub type ModelGrads<S> = ModelParams<S>;

pub const TENSOR_NAMES: [&str; 14] = [
    "rep.user_meta.weight",
    "rep.user_meta.bias",
    "rep.tweet_text.weight",
    "rep.tweet_text.bias",
    "rep.tweet_meta.weight",
    "rep.tweet_meta.bias",
    "rep.temporal.weight",
    "rep.temporal.bias",
    "enc_w1",
    "enc_b1",
    "enc_w2",
    "enc_b2",
    "head_w",
    "head_b",
];

impl<S: Scalar> ModelParams<S> {
    /// Fan-in-scaled Gaussian weights, all streams derived from `seed`.
    /// Representation blocks start with zero biases; encoder and head biases
    /// start at a small positive constant so no input can reach the
    /// projection with every ReLU unit dead and a zero-norm output.
    pub fn init(schema: &FeatureSchema, cfg: ModelConfig, seed: u64) -> Self {
        let d = cfg.d;
        let rep = RepresentationParams::init(schema, d, seed);
        let gauss = |rows: usize, cols: usize, index: u64| {
            let mut rng = rng::stream(seed, tag::INIT, index);
            let scale = (1.0 / cols as f64).sqrt();
            Matrix::from_fn(rows, cols, |_, _| S::cast(standard_normal(&mut rng) * scale))
        };
        let nudge = S::cast(0.01);
        ModelParams {
            rep,
            enc_w1: gauss(d, 4 * d, 4),
            enc_b1: vec![nudge; d],
            enc_w2: gauss(d, d, 5),
            enc_b2: vec![nudge; d],
            head_w: gauss(cfg.out_dim, d, 6),
            head_b: vec![nudge; cfg.out_dim],
        }
    }

    pub fn zeros_like(other: &Self) -> Self {
        ModelParams {
            rep: RepresentationParams::zeros_like(&other.rep),
            enc_w1: Matrix::zeros(other.enc_w1.rows(), other.enc_w1.cols()),
            enc_b1: vec![S::zero(); other.enc_b1.len()],
            enc_w2: Matrix::zeros(other.enc_w2.rows(), other.enc_w2.cols()),
            enc_b2: vec![S::zero(); other.enc_b2.len()],
            head_w: Matrix::zeros(other.head_w.rows(), other.head_w.cols()),
            head_b: vec![S::zero(); other.head_b.len()],
        }
    }

    pub fn d(&self) -> usize {
        self.rep.d
    }

    pub fn out_dim(&self) -> usize {
        self.head_w.rows()
    }

    pub fn raw_width(&self) -> usize {
        self.rep.raw_width()
    }

    /// Flat views of every tensor, in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> Vec<&[S]> {
        vec![
            self.rep.block_user_meta.weight.as_slice(),
            &self.rep.block_user_meta.bias,
            self.rep.block_tweet_text.weight.as_slice(),
            &self.rep.block_tweet_text.bias,
            self.rep.block_tweet_meta.weight.as_slice(),
            &self.rep.block_tweet_meta.bias,
            self.rep.block_temporal.weight.as_slice(),
            &self.rep.block_temporal.bias,
            self.enc_w1.as_slice(),
            &self.enc_b1,
            self.enc_w2.as_slice(),
            &self.enc_b2,
            self.head_w.as_slice(),
            &self.head_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [S]> {
        vec![
            self.rep.block_user_meta.weight.as_mut_slice(),
            &mut self.rep.block_user_meta.bias,
            self.rep.block_tweet_text.weight.as_mut_slice(),
            &mut self.rep.block_tweet_text.bias,
            self.rep.block_tweet_meta.weight.as_mut_slice(),
            &mut self.rep.block_tweet_meta.bias,
            self.rep.block_temporal.weight.as_mut_slice(),
            &mut self.rep.block_temporal.bias,
            self.enc_w1.as_mut_slice(),
            &mut self.enc_b1,
            self.enc_w2.as_mut_slice(),
            &mut self.enc_b2,
            self.head_w.as_mut_slice(),
            &mut self.head_b,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Frobenius norm over all tensors; handy for stationarity checks.
    pub fn grad_norm(&self) -> S {
        let mut acc = S::zero();
        for t in self.tensors() {
            for &v in t {
                acc += v * v;
            }
        }
        acc.sqrt()
    }
}
