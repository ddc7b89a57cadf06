//! Positive-view generation: random feature corruption, chained-equation
//! imputation, and a run-fixed linear transform, plus one-view / two-view
//! pairing of anchors with their augmented positives.
//!
//! Augmentations operate on normalized raw feature vectors, before the
//! representation blocks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{round_half_up, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{solve_linear, Matrix};
use crate::rng::{self, sample_distinct, standard_normal, tag};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    Corruption,
    Imputation,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewMode {
    /// Pair each anchor with one augmented positive.
    OneView,
    /// Discard the anchor and pair two augmented copies.
    TwoView,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationConfig {
    pub kind: AugmentationKind,
    /// Fraction of coordinates replaced by values from other training rows.
    pub corruption_rate: f64,
    /// Fraction of coordinates masked and re-estimated by imputation.
    pub nan_rate: f64,
    pub mice_iterations: usize,
    pub view_mode: ViewMode,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            kind: AugmentationKind::Corruption,
            corruption_rate: 0.6,
            nan_rate: 0.3,
            mice_iterations: 5,
            view_mode: ViewMode::OneView,
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.corruption_rate) {
            return Err(Error::config(format!(
                "corruption_rate must be in [0, 1], got {}",
                self.corruption_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.nan_rate) {
            return Err(Error::config(format!(
                "nan_rate must be in [0, 1], got {}",
                self.nan_rate
            )));
        }
        if self.mice_iterations == 0 {
            return Err(Error::config("mice_iterations must be positive"));
        }
        Ok(())
    }
}

/// Indices replaced by a corruption pass and the training rows the
/// replacement values came from. Exposed so audits can verify replacement
/// counts and membership exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct CorruptionTrace {
    pub indices: Vec<usize>,
    pub source_rows: Vec<usize>,
}

/// Random feature corruption: exactly `round(rate * width)` distinct
/// coordinates (at least one when `rate > 0`) take their value from column
/// `j` of an independently drawn training row.
pub fn corrupt<S: Scalar>(
    x: &[S],
    train: &Dataset<S>,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<S>> {
    Ok(corrupt_traced(x, train, rate, rng)?.0)
}

pub fn corrupt_traced<S: Scalar>(
    x: &[S],
    train: &Dataset<S>,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<S>, CorruptionTrace)> {
    if train.n_rows() == 0 {
        return Err(Error::config("corruption needs a non-empty training set"));
    }
    if x.len() != train.width() {
        return Err(Error::Dimension {
            context: "corrupt input width",
            expected: train.width(),
            actual: x.len(),
        });
    }
    let mut out = x.to_vec();
    if rate == 0.0 {
        return Ok((
            out,
            CorruptionTrace {
                indices: Vec::new(),
                source_rows: Vec::new(),
            },
        ));
    }
    let width = x.len();
    let k = round_half_up(rate * width as f64).clamp(1, width);
    let indices = sample_distinct(rng, width, k);
    let mut source_rows = Vec::with_capacity(k);
    for &j in &indices {
        let r = rng.random_range(0..train.n_rows());
        out[j] = train.row(r)[j];
        source_rows.push(r);
    }
    Ok((out, CorruptionTrace { indices, source_rows }))
}

/// Per-column least-squares regressions fit once over a complete training
/// set, used to re-estimate masked coordinates by chained equations.
#[derive(Clone, Debug)]
pub struct MiceImputer<S> {
    /// For column `j`: coefficients over all other columns (in ascending
    /// column order) followed by the intercept, or `None` when the normal
    /// equations were singular and the column falls back to its mean.
    betas: Vec<Option<Vec<S>>>,
    col_means: Vec<S>,
    width: usize,
}

impl<S: Scalar> MiceImputer<S> {
    pub fn fit(train: &Dataset<S>) -> Result<Self> {
        let width = train.width();
        let n = train.n_rows();
        if n < width + 1 {
            log::warn!(
                "imputer fit on {n} rows for width {width}; regressions may be singular"
            );
        }
        if n == 0 {
            return Err(Error::config("imputer needs a non-empty training set"));
        }
        // Gram matrix of the design [x, 1]; every per-column regression is a
        // submatrix selection of this.
        let p = width + 1;
        let mut gram = Matrix::<S>::zeros(p, p);
        for r in 0..n {
            let row = train.row(r);
            for a in 0..width {
                let va = row[a];
                let grow = gram.row_mut(a);
                for (b, &vb) in row.iter().enumerate() {
                    grow[b] += va * vb;
                }
                grow[width] += va;
            }
            let last = gram.row_mut(width);
            for (b, &vb) in row.iter().enumerate() {
                last[b] += vb;
            }
            last[width] += S::one();
        }

        let inv_n = S::one() / S::from_usize(n).unwrap();
        let col_means: Vec<S> = (0..width).map(|j| gram.get(width, j) * inv_n).collect();

        let mut betas = Vec::with_capacity(width);
        for j in 0..width {
            let predictors: Vec<usize> =
                (0..p).filter(|&c| c != j).collect(); // other columns + intercept
            let m = predictors.len();
            let mut a = Matrix::<S>::zeros(m, m);
            let mut b = vec![S::zero(); m];
            for (ri, &pr) in predictors.iter().enumerate() {
                for (ci, &pc) in predictors.iter().enumerate() {
                    a.set(ri, ci, gram.get(pr, pc));
                }
                b[ri] = gram.get(pr, j);
            }
            let tol = S::cast(1e-10) * a.as_slice().iter().fold(S::one(), |m, v| m.max(v.abs()));
            match solve_linear(&mut a, &mut b, tol) {
                Some(beta) => betas.push(Some(beta)),
                None => {
                    log::warn!("singular regression for column {j}; falling back to column mean");
                    betas.push(None);
                }
            }
        }
        Ok(MiceImputer {
            betas,
            col_means,
            width,
        })
    }

    /// Re-estimates the masked coordinates of `x`: initialize to column
    /// means, then `iters` rounds of chained re-prediction.
    pub fn impute(&self, x: &[S], masked: &[usize], iters: usize) -> Result<Vec<S>> {
        if x.len() != self.width {
            return Err(Error::Dimension {
                context: "impute input width",
                expected: self.width,
                actual: x.len(),
            });
        }
        let mut work = x.to_vec();
        for &j in masked {
            work[j] = self.col_means[j];
        }
        for _ in 0..iters {
            for &j in masked {
                if let Some(beta) = &self.betas[j] {
                    let mut pred = S::zero();
                    let mut bi = 0;
                    for (c, &v) in work.iter().enumerate() {
                        if c == j {
                            continue;
                        }
                        pred += beta[bi] * v;
                        bi += 1;
                    }
                    pred += beta[bi]; // intercept
                    work[j] = pred;
                }
            }
        }
        Ok(work)
    }
}

/// Imputation augmentation: mask `round(nan_rate * width)` coordinates and
/// re-estimate them with a freshly fit imputer. Training loops should fit
/// [`MiceImputer`] once and reuse it via [`Augmenter`].
pub fn impute_augment<S: Scalar>(
    x: &[S],
    train: &Dataset<S>,
    nan_rate: f64,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<S>> {
    let imputer = MiceImputer::fit(train)?;
    impute_with(&imputer, x, nan_rate, iters, rng)
}

fn impute_with<S: Scalar>(
    imputer: &MiceImputer<S>,
    x: &[S],
    nan_rate: f64,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<S>> {
    if nan_rate == 0.0 {
        return Ok(x.to_vec());
    }
    let width = x.len();
    let k = round_half_up(nan_rate * width as f64).min(width);
    let mut masked = sample_distinct(rng, width, k);
    masked.sort_unstable();
    imputer.impute(x, &masked, iters)
}

/// Run-fixed square affine map used by the linear-transformation
/// augmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearAugParams<S> {
    pub weight: Matrix<S>,
    pub bias: Vec<S>,
    pub seed: u64,
}

impl<S: Scalar> LinearAugParams<S> {
    /// Gaussian weights with variance `1/n`, zero bias.
    pub fn init(n: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, tag::AUGMENT, u64::MAX);
        let scale = (1.0 / n as f64).sqrt();
        LinearAugParams {
            weight: Matrix::from_fn(n, n, |_, _| S::cast(standard_normal(&mut rng) * scale)),
            bias: vec![S::zero(); n],
            seed,
        }
    }
}

pub fn linear_augment<S: Scalar>(params: &LinearAugParams<S>, x: &[S]) -> Result<Vec<S>> {
    if x.len() != params.weight.cols() {
        return Err(Error::Dimension {
            context: "linear_augment input",
            expected: params.weight.cols(),
            actual: x.len(),
        });
    }
    let mut out = params.weight.matvec(x);
    for (o, &b) in out.iter_mut().zip(&params.bias) {
        *o += b;
    }
    Ok(out)
}

/// The augmentation selected by a config, with its run-fixed state prepared
/// once: the linear map for [`AugmentationKind::Linear`] and the fitted
/// imputer for [`AugmentationKind::Imputation`].
pub struct Augmenter<S> {
    cfg: AugmentationConfig,
    linear: Option<LinearAugParams<S>>,
    imputer: Option<MiceImputer<S>>,
}

impl<S: Scalar> Augmenter<S> {
    pub fn new(cfg: &AugmentationConfig, train: &Dataset<S>) -> Result<Self> {
        cfg.validate()?;
        let linear = match cfg.kind {
            AugmentationKind::Linear => Some(LinearAugParams::init(train.width(), cfg.seed)),
            _ => None,
        };
        let imputer = match cfg.kind {
            AugmentationKind::Imputation => Some(MiceImputer::fit(train)?),
            _ => None,
        };
        Ok(Augmenter {
            cfg: cfg.clone(),
            linear,
            imputer,
        })
    }

    pub fn config(&self) -> &AugmentationConfig {
        &self.cfg
    }

    pub fn augment(
        &self,
        x: &[S],
        train: &Dataset<S>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<S>> {
        match self.cfg.kind {
            AugmentationKind::Corruption => corrupt(x, train, self.cfg.corruption_rate, rng),
            AugmentationKind::Imputation => impute_with(
                self.imputer.as_ref().expect("imputer prepared"),
                x,
                self.cfg.nan_rate,
                self.cfg.mice_iterations,
                rng,
            ),
            AugmentationKind::Linear => {
                linear_augment(self.linear.as_ref().expect("linear params prepared"), x)
            }
        }
    }
}

/// Derives the augmentation stream for one sample of one epoch.
pub fn view_rng(seed: u64, epoch: u64, sample_index: u64) -> ChaCha8Rng {
    rng::stream(seed, tag::AUGMENT, (epoch << 32) | sample_index)
}

/// Builds the contrastive pairs for a batch of anchors. Returns `(left,
/// right)` vectors per anchor; under one-view the left member is the anchor
/// itself, under two-view both members are independent augmentations.
/// `base_index` is the batch's offset in the epoch's sample order.
pub fn make_views<S: Scalar>(
    batch: &[&[S]],
    aug: &Augmenter<S>,
    train: &Dataset<S>,
    epoch: u64,
    base_index: u64,
) -> Result<Vec<(Vec<S>, Vec<S>)>> {
    if batch.is_empty() {
        return Err(Error::config("make_views needs a non-empty batch"));
    }
    let mut pairs = Vec::with_capacity(batch.len());
    for (i, anchor) in batch.iter().enumerate() {
        let mut rng = view_rng(aug.cfg.seed, epoch, base_index + i as u64);
        let pair = match aug.cfg.view_mode {
            ViewMode::OneView => {
                let positive = aug.augment(anchor, train, &mut rng)?;
                (anchor.to_vec(), positive)
            }
            ViewMode::TwoView => {
                let first = aug.augment(anchor, train, &mut rng)?;
                let second = aug.augment(anchor, train, &mut rng)?;
                (first, second)
            }
        };
        pairs.push(pair);
    }
    Ok(pairs)
}
