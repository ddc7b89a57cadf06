//! The trainable four-block linear user-representation layer.
//!
//! Each feature category is projected into a `D`-dimensional vector by its
//! own linear block; the four outputs are concatenated into a `4*D`-wide user
//! representation.

use serde::{Deserialize, Serialize};

use crate::dataset::{Category, FeatureSchema};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, standard_normal, tag};
use crate::scalar::Scalar;

/// One trainable affine map `x -> W x + b` with `W: D x in_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearBlock<S> {
    pub weight: Matrix<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> LinearBlock<S> {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        LinearBlock {
            weight: Matrix::zeros(out_dim, in_dim),
            bias: vec![S::zero(); out_dim],
        }
    }

    /// Zero-mean Gaussian weights with variance `1/in_dim`, zero bias.
    pub fn init(out_dim: usize, in_dim: usize, rng: &mut impl rand::Rng) -> Self {
        let scale = (1.0 / in_dim as f64).sqrt();
        LinearBlock {
            weight: Matrix::from_fn(out_dim, in_dim, |_, _| {
                S::cast(standard_normal(rng) * scale)
            }),
            bias: vec![S::zero(); out_dim],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Applies a block to an input slice: `W x + b`.
pub fn project_block<S: Scalar>(block: &LinearBlock<S>, x: &[S]) -> Result<Vec<S>> {
    if x.len() != block.in_dim() {
        return Err(Error::Dimension {
            context: "project_block input",
            expected: block.in_dim(),
            actual: x.len(),
        });
    }
    let mut out = block.weight.matvec(x);
    for (o, &b) in out.iter_mut().zip(&block.bias) {
        *o += b;
    }
    Ok(out)
}

/// Elementwise arithmetic mean of per-tweet embedding vectors.
pub fn average_embeddings<S: Scalar>(tweet_embeddings: &[Vec<S>]) -> Result<Vec<S>> {
    let first = tweet_embeddings
        .first()
        .ok_or_else(|| Error::data("cannot average an empty embedding list"))?;
    let dim = first.len();
    let mut acc = vec![S::zero(); dim];
    for (i, e) in tweet_embeddings.iter().enumerate() {
        if e.len() != dim {
            return Err(Error::Dimension {
                context: "average_embeddings entry",
                expected: dim,
                actual: tweet_embeddings[i].len(),
            });
        }
        for (a, &v) in acc.iter_mut().zip(e) {
            *a += v;
        }
    }
    let inv = S::one() / S::from_usize(tweet_embeddings.len()).unwrap();
    for a in &mut acc {
        *a *= inv;
    }
    Ok(acc)
}

/// The four category blocks. Output width is always `4 * d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationParams<S> {
    pub d: usize,
    pub block_user_meta: LinearBlock<S>,
    pub block_tweet_text: LinearBlock<S>,
    pub block_tweet_meta: LinearBlock<S>,
    pub block_temporal: LinearBlock<S>,
}

impl<S: Scalar> RepresentationParams<S> {
    pub fn init(schema: &FeatureSchema, d: usize, seed: u64) -> Self {
        let widths = [
            schema.category_width(Category::UserMeta),
            schema.category_width(Category::TweetText),
            schema.category_width(Category::TweetMeta),
            schema.category_width(Category::Temporal),
        ];
        let mut blocks = widths.iter().enumerate().map(|(i, &w)| {
            let mut rng = rng::stream(seed, tag::INIT, i as u64);
            LinearBlock::init(d, w, &mut rng)
        });
        RepresentationParams {
            d,
            block_user_meta: blocks.next().unwrap(),
            block_tweet_text: blocks.next().unwrap(),
            block_tweet_meta: blocks.next().unwrap(),
            block_temporal: blocks.next().unwrap(),
        }
    }

    pub fn zeros_like(other: &Self) -> Self {
        RepresentationParams {
            d: other.d,
            block_user_meta: LinearBlock::zeros(
                other.block_user_meta.out_dim(),
                other.block_user_meta.in_dim(),
            ),
            block_tweet_text: LinearBlock::zeros(
                other.block_tweet_text.out_dim(),
                other.block_tweet_text.in_dim(),
            ),
            block_tweet_meta: LinearBlock::zeros(
                other.block_tweet_meta.out_dim(),
                other.block_tweet_meta.in_dim(),
            ),
            block_temporal: LinearBlock::zeros(
                other.block_temporal.out_dim(),
                other.block_temporal.in_dim(),
            ),
        }
    }

    pub fn blocks(&self) -> [&LinearBlock<S>; 4] {
        [
            &self.block_user_meta,
            &self.block_tweet_text,
            &self.block_tweet_meta,
            &self.block_temporal,
        ]
    }

    pub fn raw_width(&self) -> usize {
        self.blocks().iter().map(|b| b.in_dim()).sum()
    }

    pub fn output_width(&self) -> usize {
        4 * self.d
    }
}

/// Projects a normalized raw row through all four blocks and concatenates the
/// results in category order.
pub fn build_representation<S: Scalar>(
    params: &RepresentationParams<S>,
    normalized_row: &[S],
) -> Result<Vec<S>> {
    if normalized_row.len() != params.raw_width() {
        return Err(Error::Dimension {
            context: "build_representation row",
            expected: params.raw_width(),
            actual: normalized_row.len(),
        });
    }
    let mut out = Vec::with_capacity(params.output_width());
    let mut offset = 0;
    for block in params.blocks() {
        let slice = &normalized_row[offset..offset + block.in_dim()];
        out.extend_from_slice(&project_block(block, slice)?);
        offset += block.in_dim();
    }
    Ok(out)
}
