//! Logistic-regression probe over frozen encoder outputs, with balanced
//! class weights and an opt-in joint fine-tuning mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{backward_from_encoder, forward_cached, sgd_step, ModelParams};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub max_iters: usize,
    /// Full-batch gradient-descent step; `0` picks a safe step from a
    /// smoothness bound on the data.
    pub learning_rate: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    /// Jointly fine-tune the encoder with the probe instead of freezing it.
    pub fine_tune: bool,
    pub fine_tune_iters: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            max_iters: 10_000,
            learning_rate: 0.0,
            tolerance: 1e-6,
            fine_tune: false,
            fine_tune_iters: 200,
        }
    }
}

/// Fitted probe: a weight per encoder dimension, a bias, and the balanced
/// class weights and optimizer settings used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams<S> {
    pub weight: Vec<S>,
    pub bias: S,
    /// `n_total / (2 * n_class)` for class 0 and class 1.
    pub class_weights: (S, S),
    pub iters_run: usize,
    pub learning_rate: f64,
}

/// Balanced per-class weights.
fn balanced_weights(labels: &[u8]) -> Result<(f64, f64)> {
    let n = labels.len() as f64;
    let n1 = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n0 = n - n1;
    if n0 == 0.0 || n1 == 0.0 {
        return Err(Error::config(
            "probe needs both classes present in the labels",
        ));
    }
    Ok((n / (2.0 * n0), n / (2.0 * n1)))
}

fn sigmoid<S: Scalar>(m: S) -> S {
    if m >= S::zero() {
        S::one() / (S::one() + (-m).exp())
    } else {
        let e = m.exp();
        e / (S::one() + e)
    }
}

/// Mean class-weighted cross-entropy and its gradient over `[w; b]`.
fn weighted_ce_grad<S: Scalar>(
    weight: &[S],
    bias: S,
    xs: &[Vec<S>],
    labels: &[u8],
    class_w: (S, S),
) -> (S, Vec<S>, S) {
    let n = xs.len();
    let inv_n = S::one() / S::from_usize(n).unwrap();
    let dim = weight.len();
    let mut loss = S::zero();
    let mut gw = vec![S::zero(); dim];
    let mut gb = S::zero();
    for (x, &y) in xs.iter().zip(labels) {
        let m = dot(weight, x) + bias;
        let omega = if y == 1 { class_w.1 } else { class_w.0 };
        // Stable softplus(m) - y*m.
        let softplus = m.max(S::zero()) + (S::one() + (-m.abs()).exp()).ln();
        let yv = S::from_u8(y).unwrap();
        loss += omega * (softplus - yv * m);
        let resid = omega * (sigmoid(m) - yv);
        for (g, &xv) in gw.iter_mut().zip(x) {
            *g += resid * xv;
        }
        gb += resid;
    }
    loss *= inv_n;
    for g in &mut gw {
        *g *= inv_n;
    }
    gb *= inv_n;
    (loss, gw, gb)
}

/// Safe step size from a trace bound on the logistic Hessian.
fn auto_learning_rate<S: Scalar>(xs: &[Vec<S>], labels: &[u8], class_w: (S, S)) -> f64 {
    let n = xs.len() as f64;
    let mut smoothness = 0.0f64;
    for (x, &y) in xs.iter().zip(labels) {
        let omega = if y == 1 { class_w.1 } else { class_w.0 };
        let norm2: f64 = x.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>() + 1.0;
        smoothness += 0.25 * omega.to_f64_lossy() * norm2;
    }
    smoothness /= n;
    1.0 / smoothness.max(1e-12)
}

/// Fits a balanced logistic regression on encoder outputs by full-batch
/// gradient descent, stopping at `tolerance` gradient norm or `max_iters`.
pub fn fit_probe<S: Scalar>(
    embeddings: &[Vec<S>],
    labels: &[u8],
    cfg: &ProbeConfig,
) -> Result<ProbeParams<S>> {
    if embeddings.len() != labels.len() {
        return Err(Error::Dimension {
            context: "fit_probe labels",
            expected: embeddings.len(),
            actual: labels.len(),
        });
    }
    if embeddings.is_empty() {
        return Err(Error::config("fit_probe needs at least one sample"));
    }
    let (w0, w1) = balanced_weights(labels)?;
    let class_w = (S::cast(w0), S::cast(w1));
    let dim = embeddings[0].len();
    let lr_value = if cfg.learning_rate > 0.0 {
        cfg.learning_rate
    } else {
        auto_learning_rate(embeddings, labels, class_w)
    };
    let lr = S::cast(lr_value);
    let tol = S::cast(cfg.tolerance);

    let mut weight = vec![S::zero(); dim];
    let mut bias = S::zero();
    let mut iters_run = 0;
    for _ in 0..cfg.max_iters {
        let (_, gw, gb) = weighted_ce_grad(&weight, bias, embeddings, labels, class_w);
        let gnorm = (dot(&gw, &gw) + gb * gb).sqrt();
        if gnorm < tol {
            break;
        }
        for (w, &g) in weight.iter_mut().zip(&gw) {
            *w -= lr * g;
        }
        bias -= lr * gb;
        iters_run += 1;
    }
    Ok(ProbeParams {
        weight,
        bias,
        class_weights: class_w,
        iters_run,
        learning_rate: lr_value,
    })
}

/// Score and thresholded label for one encoder output. Ties at 0.5 go to the
/// bot class.
pub fn predict<S: Scalar>(probe: &ProbeParams<S>, h: &[S]) -> (u8, S) {
    let score = sigmoid(dot(&probe.weight, h) + probe.bias);
    let label = u8::from(score >= S::cast(0.5));
    (label, score)
}

/// Opt-in joint fine-tuning: cross-entropy gradients flow through the probe
/// and the encoder/representation stack for `fine_tune_iters` full-batch
/// steps.
pub fn fine_tune_probe<S: Scalar>(
    params: &mut ModelParams<S>,
    probe: &mut ProbeParams<S>,
    normalized_rows: &[Vec<S>],
    labels: &[u8],
    cfg: &ProbeConfig,
) -> Result<()> {
    if normalized_rows.len() != labels.len() {
        return Err(Error::Dimension {
            context: "fine_tune_probe labels",
            expected: normalized_rows.len(),
            actual: labels.len(),
        });
    }
    let n = normalized_rows.len();
    let inv_n = S::one() / S::from_usize(n).unwrap();
    let lr = S::cast(if cfg.learning_rate > 0.0 {
        cfg.learning_rate
    } else {
        0.01
    });
    for _ in 0..cfg.fine_tune_iters {
        let mut grads = ModelParams::zeros_like(params);
        let mut gw = vec![S::zero(); probe.weight.len()];
        let mut gb = S::zero();
        for (row, &y) in normalized_rows.iter().zip(labels) {
            let cache = forward_cached(params, row)?;
            let m = dot(&probe.weight, &cache.h) + probe.bias;
            let omega = if y == 1 {
                probe.class_weights.1
            } else {
                probe.class_weights.0
            };
            let resid = omega * (sigmoid(m) - S::from_u8(y).unwrap()) * inv_n;
            for (g, &hv) in gw.iter_mut().zip(&cache.h) {
                *g += resid * hv;
            }
            gb += resid;
            // dL/dh = resid * w, pushed through the encoder stack.
            let dh: Vec<S> = probe.weight.iter().map(|&w| resid * w).collect();
            backward_from_encoder(params, &cache, &dh, &mut grads);
        }
        sgd_step(params, &grads, lr);
        for (w, &g) in probe.weight.iter_mut().zip(&gw) {
            *w -= lr * g;
        }
        probe.bias -= lr * gb;
    }
    Ok(())
}
