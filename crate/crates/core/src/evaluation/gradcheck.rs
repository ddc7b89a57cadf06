//! Central finite-difference verification of the analytic gradients.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{backward, encode, loss_value, LossKind, ModelGrads, ModelParams, TENSOR_NAMES};
use crate::scalar::Scalar;

/// Worst relative error overall and per tensor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub per_tensor: Vec<(String, f64)>,
    pub eps: f64,
}

/// Relative error with a floor: entries below the floor in magnitude are
/// compared at the floor's scale, since central differences carry ~1e-10 of
/// absolute noise that would swamp near-zero gradients.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Checks the analytic gradients produced by [`backward`] against central
/// finite differences of the loss at temperature 1, one scalar parameter at
/// a time.
pub fn grad_check<S: Scalar>(
    kind: LossKind,
    params: &ModelParams<S>,
    view_rows: &[Vec<S>],
    labels: Option<&[u32]>,
    eps: f64,
) -> Result<GradCheckReport> {
    let tau = 1.0;
    let (_, grads) = backward(params, view_rows, labels, kind, S::cast(tau))?;
    grad_check_against(kind, params, view_rows, labels, eps, tau, &grads)
}

/// Compares a given gradient set against finite differences. Split out so
/// tests can verify that a corrupted gradient is detected.
pub fn grad_check_against<S: Scalar>(
    kind: LossKind,
    params: &ModelParams<S>,
    view_rows: &[Vec<S>],
    labels: Option<&[u32]>,
    eps: f64,
    tau: f64,
    grads: &ModelGrads<S>,
) -> Result<GradCheckReport> {
    let tau_s = S::cast(tau);
    let eps_s = S::cast(eps);
    let mut work = params.clone();
    let n_tensors = TENSOR_NAMES.len();
    let mut per_tensor = Vec::with_capacity(n_tensors);
    let mut overall = 0.0f64;

    let eval = |p: &ModelParams<S>| -> Result<S> {
        let z: Vec<Vec<S>> = view_rows
            .iter()
            .map(|r| encode(p, r).map(|(_, z)| z))
            .collect::<Result<_>>()?;
        loss_value(kind, &z, labels, tau_s)
    };

    for t in 0..n_tensors {
        let len = work.tensors()[t].len();
        let mut worst = 0.0f64;
        for i in 0..len {
            let orig = work.tensors()[t][i];
            work.tensors_mut()[t][i] = orig + eps_s;
            let fp = eval(&work)?;
            work.tensors_mut()[t][i] = orig - eps_s;
            let fm = eval(&work)?;
            work.tensors_mut()[t][i] = orig;
            let numeric = (fp - fm).to_f64_lossy() / (2.0 * eps);
            let analytic = grads.tensors()[t][i].to_f64_lossy();
            worst = worst.max(relative_error(analytic, numeric));
        }
        overall = overall.max(worst);
        per_tensor.push((TENSOR_NAMES[t].to_string(), worst));
    }
    Ok(GradCheckReport {
        max_relative_error: overall,
        per_tensor,
        eps,
    })
}
