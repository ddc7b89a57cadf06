//! Forward pass: representation blocks, two ReLU encoder layers, and the
//! L2-normalized projection head.

use super::ModelParams;
use crate::error::{Error, Result};
use crate::linalg::l2_norm;
use crate::representation::build_representation;
use crate::scalar::Scalar;

/// Intermediate activations of one sample, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache<S> {
    pub raw: Vec<S>,
    pub rep: Vec<S>,
    pub pre1: Vec<S>,
    pub a1: Vec<S>,
    pub pre2: Vec<S>,
    pub h: Vec<S>,
    pub u: Vec<S>,
    pub norm: S,
    pub z: Vec<S>,
    /// Set when the zero-norm guard replaced `z` with a basis vector; the
    /// normalization Jacobian is treated as zero in that case.
    pub guarded: bool,
}

pub fn forward_cached<S: Scalar>(params: &ModelParams<S>, raw_row: &[S]) -> Result<ForwardCache<S>> {
    if raw_row.len() != params.raw_width() {
        return Err(Error::Dimension {
            context: "forward input width",
            expected: params.raw_width(),
            actual: raw_row.len(),
        });
    }
    let rep = build_representation(&params.rep, raw_row)?;

    let mut pre1 = params.enc_w1.matvec(&rep);
    for (p, &b) in pre1.iter_mut().zip(&params.enc_b1) {
        *p += b;
    }
    let a1: Vec<S> = pre1.iter().map(|&v| v.max(S::zero())).collect();

    let mut pre2 = params.enc_w2.matvec(&a1);
    for (p, &b) in pre2.iter_mut().zip(&params.enc_b2) {
        *p += b;
    }
    let h: Vec<S> = pre2.iter().map(|&v| v.max(S::zero())).collect();

    let mut u = params.head_w.matvec(&h);
    for (p, &b) in u.iter_mut().zip(&params.head_b) {
        *p += b;
    }
    let norm = l2_norm(&u);
    let guard = S::cast(1e-30);
    let (z, guarded) = if norm < guard {
        log::warn!("projection output had zero norm; emitting first basis vector");
        let mut e1 = vec![S::zero(); u.len()];
        e1[0] = S::one();
        (e1, true)
    } else {
        (u.iter().map(|&v| v / norm).collect(), false)
    };
    Ok(ForwardCache {
        raw: raw_row.to_vec(),
        rep,
        pre1,
        a1,
        pre2,
        h,
        u,
        norm,
        z,
        guarded,
    })
}

/// Encoder output `h` and unit-norm projection `z` for one normalized row.
pub fn encode<S: Scalar>(params: &ModelParams<S>, raw_row: &[S]) -> Result<(Vec<S>, Vec<S>)> {
    let cache = forward_cached(params, raw_row)?;
    Ok((cache.h, cache.z))
}
