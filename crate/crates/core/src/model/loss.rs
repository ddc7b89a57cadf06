//! Contrastive losses over a batch of unit-norm projections.
//!
//! The batch holds `2N` embeddings: the first `N` are one member of each
//! pair, the second `N` the other, so the partner of index `i` is
//! `(i + N) % 2N`. Losses sum a per-anchor term over all `2N` indices and
//! divide by `2N`.

use super::LossKind;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;

/// Cosine similarity of two unit vectors (a plain dot product).
#[inline]
pub fn similarity<S: Scalar>(z1: &[S], z2: &[S]) -> S {
    dot(z1, z2)
}

/// Loss value plus the gradient with respect to every embedding.
#[derive(Clone, Debug)]
pub struct LossGrad<S> {
    pub value: S,
    pub grad_z: Vec<Vec<S>>,
}

/// Partner index under the fixed first-half/second-half pairing.
#[inline]
pub fn partner(i: usize, two_n: usize) -> usize {
    (i + two_n / 2) % two_n
}

fn check_batch<S: Scalar>(z: &[Vec<S>], labels: Option<&[u32]>, kind: LossKind) -> Result<()> {
    let two_n = z.len();
    if two_n < 4 || two_n % 2 != 0 {
        return Err(Error::config(format!(
            "contrastive batch needs an even count of at least 4 embeddings, got {two_n}"
        )));
    }
    if kind.needs_labels() {
        match labels {
            None => return Err(Error::config("supervised losses require labels")),
            Some(ls) if ls.len() != two_n => {
                return Err(Error::Dimension {
                    context: "loss labels",
                    expected: two_n,
                    actual: ls.len(),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Positive indices for each anchor. InfoNCE treats only the partner view as
/// positive; the supervised variants use every same-label entry.
fn positive_sets(
    two_n: usize,
    labels: Option<&[u32]>,
    kind: LossKind,
) -> Result<Vec<Vec<usize>>> {
    let mut pos = Vec::with_capacity(two_n);
    match kind {
        LossKind::SelfSupervised => {
            for i in 0..two_n {
                pos.push(vec![partner(i, two_n)]);
            }
        }
        LossKind::Supervised | LossKind::SupervisedMod => {
            let ls = labels.expect("checked by check_batch");
            for i in 0..two_n {
                let mine: Vec<usize> =
                    (0..two_n).filter(|&k| k != i && ls[k] == ls[i]).collect();
                if mine.is_empty() {
                    return Err(Error::config(format!(
                        "sample {i} has no positive in the batch (its class appears once)"
                    )));
                }
                pos.push(mine);
            }
        }
    }
    Ok(pos)
}

struct LossCore<S> {
    sims: Matrix<S>,
    value: S,
    /// `coef[i][k]` is the derivative of the summed loss with respect to
    /// `sims[i][k]`, including the `1/2N` normalization.
    coef: Option<Matrix<S>>,
}

fn loss_core<S: Scalar>(
    z: &[Vec<S>],
    labels: Option<&[u32]>,
    kind: LossKind,
    tau: S,
    want_grad: bool,
) -> Result<LossCore<S>> {
    check_batch(z, labels, kind)?;
    if !(tau > S::zero()) {
        return Err(Error::config("temperature must be positive"));
    }
    let two_n = z.len();
    let pos = positive_sets(two_n, labels, kind)?;

    // Symmetric similarity matrix.
    let mut sims = Matrix::<S>::zeros(two_n, two_n);
    for i in 0..two_n {
        for k in i + 1..two_n {
            let s = similarity(&z[i], &z[k]);
            sims.set(i, k, s);
            sims.set(k, i, s);
        }
    }

    let inv_tau = S::one() / tau;
    let scale = S::one() / S::from_usize(two_n).unwrap();
    let mut coef = want_grad.then(|| Matrix::<S>::zeros(two_n, two_n));
    let mut value = S::zero();

    for i in 0..two_n {
        let row = sims.row(i);
        // Denominator index set: everything but self, or negatives only.
        let in_denominator = |k: usize| -> bool {
            if k == i {
                return false;
            }
            match kind {
                LossKind::SupervisedMod => {
                    let ls = labels.expect("checked");
                    ls[k] != ls[i]
                }
                _ => true,
            }
        };

        let mut max_logit = S::neg_infinity();
        for k in 0..two_n {
            if in_denominator(k) {
                max_logit = max_logit.max(row[k] * inv_tau);
            }
        }
        if max_logit == S::neg_infinity() {
            return Err(Error::config(format!(
                "sample {i} has an empty denominator (single-class batch under sup_mod)"
            )));
        }
        let mut exp_sum = S::zero();
        for k in 0..two_n {
            if in_denominator(k) {
                exp_sum += ((row[k] * inv_tau) - max_logit).exp();
            }
        }
        let lse = max_logit + exp_sum.ln();

        let inv_pos = S::one() / S::from_usize(pos[i].len()).unwrap();
        let mut pos_mean_logit = S::zero();
        for &p in &pos[i] {
            pos_mean_logit += row[p] * inv_tau;
        }
        pos_mean_logit *= inv_pos;

        // Per-anchor term. The negatives-only variant keeps the leading
        // double negative of its definition, so its sign is flipped relative
        // to the other two.
        let term = match kind {
            LossKind::SupervisedMod => pos_mean_logit - lse,
            _ => lse - pos_mean_logit,
        };
        value += term * scale;

        if let Some(c) = coef.as_mut() {
            let row_coef = c.row_mut(i);
            let sign = if kind == LossKind::SupervisedMod {
                -S::one()
            } else {
                S::one()
            };
            for k in 0..two_n {
                if in_denominator(k) {
                    let p_ik = ((row[k] * inv_tau) - lse).exp();
                    row_coef[k] += sign * p_ik * inv_tau * scale;
                }
            }
            for &p in &pos[i] {
                row_coef[p] -= sign * inv_pos * inv_tau * scale;
            }
        }
    }

    Ok(LossCore { sims, value, coef })
}

/// InfoNCE: for each of the `2N` anchors, the positive is the partner view
/// and the denominator runs over all other `2N - 1` embeddings.
pub fn info_nce<S: Scalar>(z: &[Vec<S>], tau: S) -> Result<S> {
    Ok(loss_core(z, None, LossKind::SelfSupervised, tau, false)?.value)
}

/// Supervised contrastive loss: positives are all same-label entries, the
/// denominator runs over all other embeddings, and each anchor's positive
/// terms are averaged.
pub fn supcon<S: Scalar>(z: &[Vec<S>], labels: &[u32], tau: S) -> Result<S> {
    Ok(loss_core(z, Some(labels), LossKind::Supervised, tau, false)?.value)
}

/// Negatives-only supervised variant: the denominator keeps only
/// other-class entries.
pub fn supcon_mod<S: Scalar>(z: &[Vec<S>], labels: &[u32], tau: S) -> Result<S> {
    Ok(loss_core(z, Some(labels), LossKind::SupervisedMod, tau, false)?.value)
}

/// Value of the selected loss.
pub fn loss_value<S: Scalar>(
    kind: LossKind,
    z: &[Vec<S>],
    labels: Option<&[u32]>,
    tau: S,
) -> Result<S> {
    Ok(loss_core(z, labels, kind, tau, false)?.value)
}

/// Value and gradient with respect to every embedding.
pub fn loss_with_grad<S: Scalar>(
    kind: LossKind,
    z: &[Vec<S>],
    labels: Option<&[u32]>,
    tau: S,
) -> Result<LossGrad<S>> {
    let core = loss_core(z, labels, kind, tau, true)?;
    let coef = core.coef.expect("grad requested");
    let two_n = z.len();
    let dim = z[0].len();
    // dL/dz_i = sum_k (coef[i][k] + coef[k][i]) z_k, since sims are symmetric.
    let mut grad_z = Vec::with_capacity(two_n);
    for i in 0..two_n {
        let mut g = vec![S::zero(); dim];
        for k in 0..two_n {
            if k == i {
                continue;
            }
            let w = coef.get(i, k) + coef.get(k, i);
            if w == S::zero() {
                continue;
            }
            for (gj, &zj) in g.iter_mut().zip(&z[k]) {
                *gj += w * zj;
            }
        }
        grad_z.push(g);
    }
    drop(core.sims);
    Ok(LossGrad {
        value: core.value,
        grad_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream, tag};

    fn unit<S: Scalar>(v: Vec<S>) -> Vec<S> {
        let n = dot(&v, &v).sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    fn random_unit_batch(two_n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, tag::SYNTH, 0);
        (0..two_n)
            .map(|_| unit((0..dim).map(|_| standard_normal(&mut rng)).collect()))
            .collect()
    }

    #[test]
    fn similarity_edge_cases() {
        let z = unit(vec![1.0f64, 2.0, 2.0]);
        assert!((similarity(&z, &z) - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        assert!((similarity(&z, &neg) + 1.0).abs() < 1e-12);
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        assert_eq!(similarity(&e1, &e2), 0.0);
    }

    #[test]
    fn info_nce_matches_aligned_pair_closed_form() {
        // Pairs aligned, cross-pair sims zero: per-anchor loss ln(e+2) - 1.
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let z = vec![e1.clone(), e2.clone(), e1, e2];
        let got = info_nce(&z, 1.0).unwrap();
        let want = (std::f64::consts::E + 2.0).ln() - 1.0;
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }

    #[test]
    fn info_nce_matches_collapsed_closed_form() {
        let e1 = vec![1.0, 0.0];
        let z = vec![e1.clone(), e1.clone(), e1.clone(), e1];
        let got = info_nce(&z, 1.0).unwrap();
        assert!((got - 3.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn info_nce_is_invariant_to_negative_permutation() {
        let mut z = random_unit_batch(8, 5, 3);
        let base = info_nce(&z, 0.7).unwrap();
        // Swap two entries of the same half; pairing moves with the entries
        // only if we also swap their partners, so swap both.
        z.swap(1, 2);
        z.swap(5, 6);
        let permuted = info_nce(&z, 0.7).unwrap();
        assert!((base - permuted).abs() < 1e-12);
    }

    #[test]
    fn supcon_reduces_to_info_nce_on_distinct_labels() {
        for seed in 0..10 {
            let z = random_unit_batch(12, 6, seed);
            let labels: Vec<u32> = (0..6).chain(0..6).map(|v| v as u32).collect();
            let a = supcon(&z, &labels, 0.9).unwrap();
            let b = info_nce(&z, 0.9).unwrap();
            assert!(
                (a - b).abs() < 1e-12,
                "seed {seed}: supcon {a} vs info_nce {b}"
            );
        }
    }

    #[test]
    fn supcon_matches_exhaustive_sum_oracle() {
        let z = random_unit_batch(8, 4, 11);
        let labels: Vec<u32> = vec![0, 0, 1, 1, 0, 0, 1, 1];
        let tau = 0.8;
        let got = supcon(&z, &labels, tau).unwrap();
        // Brute-force evaluation straight from the definition.
        let two_n = z.len();
        let mut total = 0.0;
        for i in 0..two_n {
            let pos: Vec<usize> = (0..two_n)
                .filter(|&p| p != i && labels[p] == labels[i])
                .collect();
            let mut anchor = 0.0;
            for &p in &pos {
                let num = (similarity(&z[i], &z[p]) / tau).exp();
                let den: f64 = (0..two_n)
                    .filter(|&k| k != i)
                    .map(|k| (similarity(&z[i], &z[k]) / tau).exp())
                    .sum();
                anchor += -(num / den).ln();
            }
            total += anchor / pos.len() as f64;
        }
        total /= two_n as f64;
        assert!((got - total).abs() < 1e-12, "got {got}, oracle {total}");
    }

    #[test]
    fn supcon_changes_with_temperature() {
        let z = random_unit_batch(8, 4, 5);
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let a = supcon(&z, &labels, 1.0).unwrap();
        let b = supcon(&z, &labels, 2.0).unwrap();
        assert!((a - b).abs() > 1e-6);
    }

    #[test]
    fn supcon_mod_matches_orthogonal_class_closed_form() {
        // Two classes, one pair each, positives aligned, cross-class sims
        // zero: per-anchor value 1 - ln 2.
        let a = vec![1.0, 0.0];
        let b = vec![0.0, 1.0];
        let z = vec![a.clone(), b.clone(), a, b];
        let labels = vec![0, 1, 0, 1];
        let got = supcon_mod(&z, &labels, 1.0).unwrap();
        let want = 1.0 - 2.0f64.ln();
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }

    #[test]
    fn supcon_mod_rejects_single_class_batches() {
        let z = random_unit_batch(4, 3, 2);
        let labels = vec![1, 1, 1, 1];
        assert!(supcon_mod(&z, &labels, 1.0).is_err());
    }

    #[test]
    fn supcon_rejects_a_sample_with_no_positive() {
        // Index 3's class appears once in the batch.
        let z = random_unit_batch(4, 3, 6);
        let labels = vec![0, 1, 0, 2];
        let err = supcon(&z, &labels, 1.0).unwrap_err();
        assert!(err.to_string().contains("no positive"), "{err}");
    }

    #[test]
    fn supcon_mod_matches_exhaustive_sum_oracle() {
        let z = random_unit_batch(8, 4, 13);
        let labels = vec![0, 1, 1, 0, 0, 1, 1, 0];
        let tau = 1.3;
        let got = supcon_mod(&z, &labels, tau).unwrap();
        let two_n = z.len();
        let mut total = 0.0;
        for i in 0..two_n {
            let pos: Vec<usize> = (0..two_n)
                .filter(|&p| p != i && labels[p] == labels[i])
                .collect();
            let neg: Vec<usize> = (0..two_n)
                .filter(|&k| k != i && labels[k] != labels[i])
                .collect();
            let den: f64 = neg
                .iter()
                .map(|&k| (similarity(&z[i], &z[k]) / tau).exp())
                .sum();
            let mut anchor = 0.0;
            for &p in &pos {
                let num = (similarity(&z[i], &z[p]) / tau).exp();
                anchor += (num / den).ln();
            }
            total += anchor / pos.len() as f64;
        }
        total /= two_n as f64;
        assert!((got - total).abs() < 1e-12, "got {got}, oracle {total}");
    }

    #[test]
    fn grad_z_matches_finite_differences() {
        let tau = 0.9;
        for (kind, labels) in [
            (LossKind::SelfSupervised, None),
            (LossKind::Supervised, Some(vec![0u32, 1, 0, 1, 0, 1])),
            (LossKind::SupervisedMod, Some(vec![0u32, 1, 0, 1, 0, 1])),
        ] {
            let z = random_unit_batch(6, 4, 21);
            let out = loss_with_grad(kind, &z, labels.as_deref(), tau).unwrap();
            let eps = 1e-6;
            for i in 0..z.len() {
                for j in 0..z[i].len() {
                    let mut zp = z.clone();
                    zp[i][j] += eps;
                    let fp = loss_value(kind, &zp, labels.as_deref(), tau).unwrap();
                    zp[i][j] -= 2.0 * eps;
                    let fm = loss_value(kind, &zp, labels.as_deref(), tau).unwrap();
                    let fd = (fp - fm) / (2.0 * eps);
                    let an = out.grad_z[i][j];
                    assert!(
                        (fd - an).abs() < 1e-7,
                        "{kind:?} grad mismatch at ({i},{j}): fd {fd}, analytic {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn tiny_batches_are_rejected() {
        let z = random_unit_batch(2, 3, 1);
        assert!(info_nce(&z, 1.0).is_err());
    }
}
