//! Bias-corrected Adam and plain SGD updates over the model tensors.

use super::{ModelGrads, ModelParams};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First/second moment accumulators mirroring the parameter shapes, plus the
/// step counter.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    m: ModelParams<S>,
    v: ModelParams<S>,
    t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &ModelParams<S>) -> Self {
        AdamState {
            m: ModelParams::zeros_like(params),
            v: ModelParams::zeros_like(params),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update; increments the step counter once.
pub fn adam_step<S: Scalar>(
    state: &mut AdamState<S>,
    params: &mut ModelParams<S>,
    grads: &ModelGrads<S>,
    lr: S,
) {
    state.t += 1;
    let b1 = S::cast(ADAM_BETA1);
    let b2 = S::cast(ADAM_BETA2);
    let eps = S::cast(ADAM_EPSILON);
    let one = S::one();
    let corr1 = one - b1.powi(state.t as i32);
    let corr2 = one - b2.powi(state.t as i32);

    let mut p = params.tensors_mut();
    let g = grads.tensors();
    let mut m = state.m.tensors_mut();
    let mut v = state.v.tensors_mut();
    for t in 0..p.len() {
        let (pt, gt, mt, vt) = (&mut p[t], g[t], &mut m[t], &mut v[t]);
        for i in 0..pt.len() {
            let grad = gt[i];
            mt[i] = b1 * mt[i] + (one - b1) * grad;
            vt[i] = b2 * vt[i] + (one - b2) * grad * grad;
            let m_hat = mt[i] / corr1;
            let v_hat = vt[i] / corr2;
            pt[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Plain gradient-descent update.
pub fn sgd_step<S: Scalar>(params: &mut ModelParams<S>, grads: &ModelGrads<S>, lr: S) {
    let mut p = params.tensors_mut();
    let g = grads.tensors();
    for t in 0..p.len() {
        for i in 0..p[t].len() {
            p[t][i] -= lr * g[t][i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSchema;
    use crate::model::ModelConfig;

    fn params() -> ModelParams<f64> {
        let schema = FeatureSchema::synthetic(2, 2, 2, 2).unwrap();
        ModelParams::init(&schema, ModelConfig { d: 2, out_dim: 2 }, 3)
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut p = params();
        let before = p.clone();
        let grads = ModelParams::zeros_like(&p);
        let mut state = AdamState::new(&p);
        adam_step(&mut state, &mut p, &grads, 0.01);
        assert_eq!(p, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn step_counter_increments_once_per_call() {
        let mut p = params();
        let grads = ModelParams::zeros_like(&p);
        let mut state = AdamState::new(&p);
        for want in 1..=5 {
            adam_step(&mut state, &mut p, &grads, 0.01);
            assert_eq!(state.step_count(), want);
        }
    }

    #[test]
    fn constant_gradient_update_magnitude_approaches_lr() {
        // Scalar simulation: with a constant gradient, m_hat -> g and
        // v_hat -> g^2, so the per-step move approaches lr.
        let mut p = params();
        let mut grads = ModelParams::zeros_like(&p);
        grads.tensors_mut()[0][0] = 0.37;
        let lr = 0.004;
        let mut state = AdamState::new(&p);
        let mut prev = p.tensors()[0][0];
        let mut last_delta = 0.0;
        for _ in 0..500 {
            adam_step(&mut state, &mut p, &grads, lr);
            let cur = p.tensors()[0][0];
            last_delta = (prev - cur).abs();
            prev = cur;
        }
        assert!(
            (last_delta - lr).abs() / lr < 0.05,
            "delta {last_delta} vs lr {lr}"
        );
    }

    #[test]
    fn sgd_moves_against_the_gradient() {
        let mut p = params();
        let before = p.tensors()[0][0];
        let mut grads = ModelParams::zeros_like(&p);
        grads.tensors_mut()[0][0] = 2.0;
        sgd_step(&mut p, &grads, 0.1);
        assert!((p.tensors()[0][0] - (before - 0.2)).abs() < 1e-15);
    }
}
