//! Exact analytic gradients of the contrastive losses with respect to every
//! trainable tensor, including the L2-normalization Jacobian of the
//! projection head.

use super::forward::{forward_cached, ForwardCache};
use super::loss::loss_with_grad;
use super::{LossKind, ModelGrads, ModelParams};
use crate::error::Result;
use crate::linalg::dot;
use crate::scalar::Scalar;

/// Runs the forward pass over the `2N` view rows, evaluates the selected
/// loss, and backpropagates. Returns the loss value and gradients shaped
/// like the parameters. Samples are accumulated in index order, so the
/// reduction order is fixed.
pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    view_rows: &[Vec<S>],
    labels: Option<&[u32]>,
    kind: LossKind,
    tau: S,
) -> Result<(S, ModelGrads<S>)> {
    let caches: Vec<ForwardCache<S>> = view_rows
        .iter()
        .map(|row| forward_cached(params, row))
        .collect::<Result<_>>()?;
    let z: Vec<Vec<S>> = caches.iter().map(|c| c.z.clone()).collect();
    let loss = loss_with_grad(kind, &z, labels, tau)?;

    let mut grads = ModelParams::zeros_like(params);
    for (cache, gz) in caches.iter().zip(&loss.grad_z) {
        accumulate_sample(params, cache, gz, &mut grads);
    }
    Ok((loss.value, grads))
}

/// Backpropagates one sample's `dL/dz` into the gradient accumulator.
fn accumulate_sample<S: Scalar>(
    params: &ModelParams<S>,
    cache: &ForwardCache<S>,
    grad_z: &[S],
    grads: &mut ModelGrads<S>,
) {
    if cache.guarded {
        // The guard emitted a constant vector; nothing flows upstream.
        return;
    }
    // z = u / |u|  =>  dL/du = (g - (z . g) z) / |u|.
    let zg = dot(&cache.z, grad_z);
    let inv_norm = S::one() / cache.norm;
    let du: Vec<S> = grad_z
        .iter()
        .zip(&cache.z)
        .map(|(&g, &zj)| (g - zg * zj) * inv_norm)
        .collect();

    // Projection head: u = head_w h + head_b.
    grads.head_w.add_outer(S::one(), &du, &cache.h);
    for (b, &d) in grads.head_b.iter_mut().zip(&du) {
        *b += d;
    }
    let dh = params.head_w.tr_matvec(&du);
    backward_from_encoder(params, cache, &dh, grads);
}

/// Backpropagates a gradient with respect to the encoder output `h` through
/// both encoder layers and the representation blocks. Used by the joint
/// fine-tuning path, which attaches a classification head to `h` directly.
pub fn backward_from_encoder<S: Scalar>(
    params: &ModelParams<S>,
    cache: &ForwardCache<S>,
    dh: &[S],
    grads: &mut ModelGrads<S>,
) {
    // h = relu(pre2), pre2 = enc_w2 a1 + enc_b2.
    let dpre2: Vec<S> = dh
        .iter()
        .zip(&cache.pre2)
        .map(|(&g, &p)| if p > S::zero() { g } else { S::zero() })
        .collect();
    grads.enc_w2.add_outer(S::one(), &dpre2, &cache.a1);
    for (b, &d) in grads.enc_b2.iter_mut().zip(&dpre2) {
        *b += d;
    }
    let da1 = params.enc_w2.tr_matvec(&dpre2);

    // a1 = relu(pre1), pre1 = enc_w1 rep + enc_b1.
    let dpre1: Vec<S> = da1
        .iter()
        .zip(&cache.pre1)
        .map(|(&g, &p)| if p > S::zero() { g } else { S::zero() })
        .collect();
    grads.enc_w1.add_outer(S::one(), &dpre1, &cache.rep);
    for (b, &d) in grads.enc_b1.iter_mut().zip(&dpre1) {
        *b += d;
    }
    let drep = params.enc_w1.tr_matvec(&dpre1);

    // Representation blocks: quarter q of rep comes from block q applied to
    // its category slice of the raw row.
    let d = params.d();
    let mut offset = 0;
    let blocks = [
        (&mut grads.rep.block_user_meta, &params.rep.block_user_meta),
        (&mut grads.rep.block_tweet_text, &params.rep.block_tweet_text),
        (&mut grads.rep.block_tweet_meta, &params.rep.block_tweet_meta),
        (&mut grads.rep.block_temporal, &params.rep.block_temporal),
    ];
    for (q, (gblock, pblock)) in blocks.into_iter().enumerate() {
        let dquarter = &drep[q * d..(q + 1) * d];
        let x_cat = &cache.raw[offset..offset + pblock.in_dim()];
        gblock.weight.add_outer(S::one(), dquarter, x_cat);
        for (b, &g) in gblock.bias.iter_mut().zip(dquarter) {
            *b += g;
        }
        offset += pblock.in_dim();
    }
}
