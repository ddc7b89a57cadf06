//! Brute-force evasion search over bounded raw-feature grids against a
//! frozen pipeline.
//!
//! The search is black-box: the only interaction with the model is its
//! prediction function. Candidates are visited in lexicographic grid order
//! and the search stops at the first bot-to-human flip.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{Category, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::pipeline::Pipeline;
use crate::rng::{self, tag};
use crate::scalar::Scalar;

/// Finite ascending perturbation values for one raw feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureGrid {
    pub feature_name: String,
    pub values: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(feature_name: impl Into<String>, values: Vec<f64>) -> Self {
        FeatureGrid {
            feature_name: feature_name.into(),
            values,
        }
    }

    /// Inclusive arithmetic range; the upper bound is appended when the step
    /// does not land on it.
    pub fn range(feature_name: impl Into<String>, start: f64, end: f64, step: f64) -> Self {
        let mut values = Vec::new();
        let mut v = start;
        while v <= end + 1e-9 {
            values.push(v);
            v += step;
        }
        if let Some(&last) = values.last() {
            if (last - end).abs() > 1e-9 {
                values.push(end);
            }
        }
        FeatureGrid {
            feature_name: feature_name.into(),
            values,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config(format!(
                "grid for '{}' has no values",
                self.feature_name
            )));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(format!(
                "grid for '{}' must be strictly ascending",
                self.feature_name
            )));
        }
        Ok(())
    }
}

/// Which feature category the adversary manipulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackGroup {
    UserMeta,
    TweetMeta,
    Temporal,
    All,
}

impl AttackGroup {
    fn admits(self, cat: Category) -> bool {
        match self {
            AttackGroup::UserMeta => cat == Category::UserMeta,
            AttackGroup::TweetMeta => cat == Category::TweetMeta,
            AttackGroup::Temporal => cat == Category::Temporal,
            AttackGroup::All => cat != Category::TweetText,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackSpec {
    pub group: AttackGroup,
    pub grids: Vec<FeatureGrid>,
    pub max_queries_per_sample: u64,
    pub seed: u64,
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackSpec {
            group: AttackGroup::All,
            grids: default_grids(),
            max_queries_per_sample: 1_000_000,
            seed: 0,
        }
    }
}

/// Default grids over the seven manipulable features. Bounds follow the
/// platform limits; steps are coarse enough to keep single-group products
/// small.
pub fn default_grids() -> Vec<FeatureGrid> {
    vec![
        FeatureGrid::range("followers_count", 0.0, 1000.0, 50.0),
        FeatureGrid::range("friends_count", 0.0, 1000.0, 50.0),
        FeatureGrid::range("mean_no_words", 1.0, 55.0, 5.0),
        FeatureGrid::range("mean_favourites_per_tweet", 0.0, 1000.0, 50.0),
        FeatureGrid::range("mean_retweets_per_tweet", 0.0, 200.0, 10.0),
        FeatureGrid::range("max_tweets_per_hour", 0.0, 100.0, 5.0),
        FeatureGrid::range("max_tweets_per_day", 0.0, 200.0, 10.0),
    ]
}

impl AttackSpec {
    /// Resolves the grids the group selects, in schema column order.
    /// Rejects unknown feature names and embedding-block targets.
    pub fn active_grids<'a>(
        &'a self,
        schema: &FeatureSchema,
    ) -> Result<Vec<(usize, &'a FeatureGrid)>> {
        let mut active = Vec::new();
        for grid in &self.grids {
            grid.validate()?;
            let col = schema.column_of(&grid.feature_name).ok_or_else(|| {
                Error::config(format!(
                    "grid feature '{}' is not in the schema",
                    grid.feature_name
                ))
            })?;
            if self.group.admits(schema.category_of(col)) {
                active.push((col, grid));
            }
        }
        active.sort_by_key(|&(col, _)| col);
        Ok(active)
    }
}

/// Lazy lexicographic walk over the Cartesian product of the active grids.
/// The first grid varies slowest. Candidates identical to the original
/// sample are skipped.
pub struct PerturbationIter<'a, S> {
    sample: &'a [S],
    grids: Vec<(usize, &'a FeatureGrid)>,
    odometer: Vec<usize>,
    exhausted: bool,
}

impl<'a, S: Scalar> PerturbationIter<'a, S> {
    fn candidate(&self) -> (Vec<S>, Vec<(usize, f64)>) {
        let mut row = self.sample.to_vec();
        let mut changed = Vec::with_capacity(self.grids.len());
        for (slot, &(col, grid)) in self.odometer.iter().zip(&self.grids) {
            let v = grid.values[*slot];
            row[col] = S::cast(v);
            changed.push((col, v));
        }
        (row, changed)
    }

    fn advance(&mut self) {
        for pos in (0..self.odometer.len()).rev() {
            self.odometer[pos] += 1;
            if self.odometer[pos] < self.grids[pos].1.values.len() {
                return;
            }
            self.odometer[pos] = 0;
        }
        self.exhausted = true;
    }
}

impl<'a, S: Scalar> Iterator for PerturbationIter<'a, S> {
    /// Candidate row plus the `(column, raw value)` substitutions it carries.
    type Item = (Vec<S>, Vec<(usize, f64)>);

    fn next(&mut self) -> Option<Self::Item> {
        while !self.exhausted {
            let (row, changed) = self.candidate();
            self.advance();
            if row != self.sample {
                return Some((row, changed));
            }
        }
        None
    }
}

/// Builds the ordered candidate sequence for one sample. Errors when the
/// full product exceeds the per-sample query budget; pick coarser grids or
/// raise the budget in that case.
pub fn enumerate_perturbations<'a, S: Scalar>(
    spec: &'a AttackSpec,
    schema: &FeatureSchema,
    sample: &'a [S],
) -> Result<PerturbationIter<'a, S>> {
    let grids = spec.active_grids(schema)?;
    let mut product: u64 = 1;
    for (_, grid) in &grids {
        product = product
            .checked_mul(grid.values.len() as u64)
            .unwrap_or(u64::MAX);
    }
    if product > spec.max_queries_per_sample {
        return Err(Error::config(format!(
            "perturbation product {product} exceeds the per-sample budget {}; \
             use coarser grids or raise max_queries_per_sample",
            spec.max_queries_per_sample
        )));
    }
    let exhausted = grids.is_empty();
    Ok(PerturbationIter {
        sample,
        odometer: vec![0; grids.len()],
        grids,
        exhausted,
    })
}

/// A successful evasion: the candidate index it occurred at, the raw
/// substitutions, and the full perturbed row for re-verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessfulPerturbation {
    pub candidate_index: u64,
    pub changed: Vec<(String, f64)>,
    pub row: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub id: String,
    /// The pipeline's verdict on the unperturbed row.
    pub predicted_bot: bool,
    pub queries: u64,
    pub success: Option<SuccessfulPerturbation>,
}

/// Campaign summary. `success_rate` divides by the full initial sample
/// count, not the attackable count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub group: AttackGroup,
    pub seed: u64,
    pub initial_samples: usize,
    pub attacked: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub total_queries: u64,
    pub wall_clock_seconds: f64,
    pub outcomes: Vec<SampleOutcome>,
}

impl AttackReport {
    /// Copy with timing zeroed, for byte-identical comparison.
    pub fn normalized(&self) -> AttackReport {
        AttackReport {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// The one model access the adversary has.
pub trait PredictOracle<S> {
    fn predict_raw(&self, raw_row: &[S]) -> Result<(u8, S)>;
}

impl<S: Scalar> PredictOracle<S> for Pipeline<S> {
    fn predict_raw(&self, raw_row: &[S]) -> Result<(u8, S)> {
        Pipeline::predict_raw(self, raw_row)
    }
}

/// Attacks one bot-predicted sample: walks the candidate sequence through
/// the oracle and stops at the first human verdict. The caller must have
/// established the bot precondition; `id` is only for the record.
pub fn attack_sample<S: Scalar, O: PredictOracle<S>>(
    oracle: &O,
    schema: &FeatureSchema,
    id: &str,
    sample: &[S],
    spec: &AttackSpec,
) -> Result<SampleOutcome> {
    let mut queries = 0u64;
    let mut success = None;
    for (index, (candidate, changed)) in
        enumerate_perturbations(spec, schema, sample)?.enumerate()
    {
        let (label, _) = oracle.predict_raw(&candidate)?;
        queries += 1;
        if label == 0 {
            let headers = schema.column_headers();
            success = Some(SuccessfulPerturbation {
                candidate_index: index as u64,
                changed: changed
                    .into_iter()
                    .map(|(col, v)| (headers[col].clone(), v))
                    .collect(),
                row: candidate.iter().map(|v| v.to_f64_lossy()).collect(),
            });
            break;
        }
        if queries >= spec.max_queries_per_sample {
            break;
        }
    }
    Ok(SampleOutcome {
        id: id.to_string(),
        predicted_bot: true,
        queries,
        success,
    })
}

/// Runs the campaign: classifies every provided sample once, attacks the
/// bot-predicted ones in order, and reports the success rate over the full
/// initial count.
pub fn attack_campaign<S: Scalar, O: PredictOracle<S>>(
    oracle: &O,
    samples: &Dataset<S>,
    spec: &AttackSpec,
) -> Result<AttackReport> {
    let started = Instant::now();
    let mut outcomes = Vec::with_capacity(samples.n_rows());
    let mut total_queries = 0u64;
    let mut successes = 0usize;
    let mut attacked = 0usize;
    for r in 0..samples.n_rows() {
        let row = samples.row(r);
        let id = &samples.ids()[r];
        let (label, _) = oracle.predict_raw(row)?;
        total_queries += 1;
        if label == 0 {
            // Already predicted human: non-attackable under the threat model.
            outcomes.push(SampleOutcome {
                id: id.clone(),
                predicted_bot: false,
                queries: 0,
                success: None,
            });
            continue;
        }
        attacked += 1;
        let outcome = attack_sample(oracle, samples.schema(), id, row, spec)?;
        total_queries += outcome.queries;
        if outcome.success.is_some() {
            successes += 1;
        }
        outcomes.push(outcome);
    }
    Ok(AttackReport {
        group: spec.group,
        seed: spec.seed,
        initial_samples: samples.n_rows(),
        attacked,
        successes,
        success_rate: successes as f64 / samples.n_rows() as f64,
        total_queries,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outcomes,
    })
}

/// Draws the campaign's input set: `n_each` predicted-bot rows and `n_each`
/// predicted-human rows, seeded-uniformly from the eligible pools.
pub fn select_attack_samples<S: Scalar, O: PredictOracle<S>>(
    oracle: &O,
    ds: &Dataset<S>,
    n_each: usize,
    seed: u64,
) -> Result<Dataset<S>> {
    let mut bots = Vec::new();
    let mut humans = Vec::new();
    for r in 0..ds.n_rows() {
        let (label, _) = oracle.predict_raw(ds.row(r))?;
        if label == 1 {
            bots.push(r);
        } else {
            humans.push(r);
        }
    }
    if bots.len() < n_each || humans.len() < n_each {
        return Err(Error::config(format!(
            "need {n_each} predicted bots and humans, found {} and {}",
            bots.len(),
            humans.len()
        )));
    }
    let mut rng = rng::stream(seed, tag::ATTACK, 0);
    let pick_bots = rng::sample_distinct(&mut rng, bots.len(), n_each);
    let pick_humans = rng::sample_distinct(&mut rng, humans.len(), n_each);
    let mut indices: Vec<usize> = pick_bots.into_iter().map(|i| bots[i]).collect();
    indices.extend(pick_humans.into_iter().map(|i| humans[i]));
    indices.sort_unstable();
    Ok(ds.select(&indices))
}
