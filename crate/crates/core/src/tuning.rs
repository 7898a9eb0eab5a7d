//! K-fold cross-validation, grid search and randomized search.
//!
//! Trials are scored by the mean of their fold scores, higher is better.
//! Model seeds are derived from `(search seed, trial index, fold index)`,
//! so any trial can be re-scored on its own with [`cross_val_score`].

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::metrics::{mse, rmsle};
use crate::models::{fit_model, HyperParams, MaxFeatures, ModelKind, Regressor, TrainedModel};
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvScheme {
    pub k: usize,
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for CvScheme {
    fn default() -> Self {
        CvScheme {
            k: 5,
            shuffle: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Partitions `0..n_rows` into `k` validation folds whose sizes differ by
/// at most one (the first `n_rows % k` folds are larger). Both index lists
/// of every fold are sorted.
pub fn k_fold_split(n_rows: usize, scheme: &CvScheme) -> Result<Vec<Fold>> {
    if scheme.k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {}", scheme.k)));
    }
    if n_rows < scheme.k {
        return Err(Error::invalid(format!("{n_rows} rows cannot fill {} folds", scheme.k)));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    if scheme.shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(scheme.seed));
    }
    let (base, extra) = (n_rows / scheme.k, n_rows % scheme.k);
    let mut folds = Vec::with_capacity(scheme.k);
    let mut start = 0;
    for f in 0..scheme.k {
        let len = base + usize::from(f < extra);
        let mut validation = order[start..start + len].to_vec();
        validation.sort_unstable();
        let mut in_fold = vec![false; n_rows];
        for &i in &validation {
            in_fold[i] = true;
        }
        let train = (0..n_rows).filter(|&i| !in_fold[i]).collect();
        folds.push(Fold { train, validation });
        start += len;
    }
    Ok(folds)
}

/// Fold score; both variants are negated losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    NegMse,
    NegRmsle,
}

impl Scoring {
    pub fn score<T: Scalar>(self, y: &[T], y_hat: &[T]) -> Result<T> {
        Ok(match self {
            Scoring::NegMse => -mse(y, y_hat)?,
            Scoring::NegRmsle => -rmsle(y, y_hat)?,
        })
    }
}

impl std::str::FromStr for Scoring {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neg_mse" | "mse" => Ok(Scoring::NegMse),
            "neg_rmsle" | "rmsle" => Ok(Scoring::NegRmsle),
            _ => Err(Error::invalid(format!("unknown scoring {s:?}"))),
        }
    }
}

/// Something that can be fitted on a training fold.
pub trait Learner<T: Scalar>: Sync {
    type Model: Regressor<T>;
    fn fit(&self, x: &DesignMatrix<T>, y: &[T], seed: u64) -> Result<Self::Model>;
}

impl<T, M, F> Learner<T> for F
where
    T: Scalar,
    M: Regressor<T>,
    F: Fn(&DesignMatrix<T>, &[T], u64) -> Result<M> + Sync,
{
    type Model = M;
    fn fit(&self, x: &DesignMatrix<T>, y: &[T], seed: u64) -> Result<M> {
        self(x, y, seed)
    }
}

/// A model kind with fixed hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub params: HyperParams,
}

impl<T: Scalar> Learner<T> for ModelSpec {
    type Model = TrainedModel<T>;
    fn fit(&self, x: &DesignMatrix<T>, y: &[T], seed: u64) -> Result<TrainedModel<T>> {
        fit_model(self.kind, x, y, &self.params, seed)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(index))
}

fn mean<T: Scalar>(v: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    for &s in v {
        acc.add(s);
    }
    acc.value() / <T as Scalar>::from_usize(v.len())
}

fn score_folds<T: Scalar, L: Learner<T> + ?Sized>(
    learner: &L,
    x: &DesignMatrix<T>,
    y: &[T],
    folds: &[Fold],
    scoring: Scoring,
    seed: u64,
) -> Result<Vec<T>> {
    folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let run = || -> Result<T> {
                let x_train = x.select_rows(&fold.train);
                let y_train: Vec<T> = fold.train.iter().map(|&i| y[i]).collect();
                let model = learner.fit(&x_train, &y_train, derive_seed(seed, f as u64))?;
                let pred = model.predict(&x.select_rows(&fold.validation))?;
                let y_val: Vec<T> = fold.validation.iter().map(|&i| y[i]).collect();
                scoring.score(&y_val, &pred)
            };
            run().map_err(|e| Error::Fold {
                fold: f,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Fits on each training fold and scores on its validation fold. The model
/// for fold `f` gets seed `derive_seed(seed, f)`.
pub fn cross_val_score<T: Scalar, L: Learner<T> + ?Sized>(
    learner: &L,
    x: &DesignMatrix<T>,
    y: &[T],
    scheme: &CvScheme,
    scoring: Scoring,
    seed: u64,
) -> Result<Vec<T>> {
    if x.n_rows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.n_rows(), y.len())));
    }
    let folds = k_fold_split(x.n_rows(), scheme)?;
    score_folds(learner, x, y, &folds, scoring, seed)
}

/// Explicit candidate lists. `None` keeps the value from `base`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamGrid {
    pub base: HyperParams,
    pub n_estimators: Option<Vec<usize>>,
    pub max_depth: Option<Vec<Option<usize>>>,
    pub min_samples_split: Option<Vec<usize>>,
    pub min_samples_leaf: Option<Vec<usize>>,
    pub max_features: Option<Vec<MaxFeatures>>,
    pub bootstrap: Option<Vec<bool>>,
    pub learning_rate: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

fn axis_len<V>(name: &str, list: &Option<Vec<V>>) -> Result<usize> {
    match list {
        None => Ok(1),
        Some(v) if v.is_empty() => Err(Error::invalid(format!("grid list {name} is empty"))),
        Some(v) => Ok(v.len()),
    }
}

fn pick<V: Copy>(list: &Option<Vec<V>>, idx: usize, base: V) -> V {
    list.as_ref().map_or(base, |v| v[idx])
}

impl ParamGrid {
    fn radices(&self) -> Result<[usize; 8]> {
        Ok([
            axis_len("n_estimators", &self.n_estimators)?,
            axis_len("max_depth", &self.max_depth)?,
            axis_len("min_samples_split", &self.min_samples_split)?,
            axis_len("min_samples_leaf", &self.min_samples_leaf)?,
            axis_len("max_features", &self.max_features)?,
            axis_len("bootstrap", &self.bootstrap)?,
            axis_len("learning_rate", &self.learning_rate)?,
            axis_len("lambda", &self.lambda)?,
        ])
    }

    pub fn len(&self) -> Result<usize> {
        Ok(self.radices()?.iter().product())
    }

    /// All combinations in lexicographic order of the field list, the last
    /// field varying fastest.
    pub fn points(&self) -> Result<Vec<HyperParams>> {
        let radices = self.radices()?;
        let total: usize = radices.iter().product();
        let b = self.base;
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut idx = [0usize; 8];
            let mut rem = flat;
            for a in (0..8).rev() {
                idx[a] = rem % radices[a];
                rem /= radices[a];
            }
            let p = HyperParams {
                n_estimators: pick(&self.n_estimators, idx[0], b.n_estimators),
                max_depth: pick(&self.max_depth, idx[1], b.max_depth),
                min_samples_split: pick(&self.min_samples_split, idx[2], b.min_samples_split),
                min_samples_leaf: pick(&self.min_samples_leaf, idx[3], b.min_samples_leaf),
                max_features: pick(&self.max_features, idx[4], b.max_features),
                bootstrap: pick(&self.bootstrap, idx[5], b.bootstrap),
                learning_rate: pick(&self.learning_rate, idx[6], b.learning_rate),
                lambda: pick(&self.lambda, idx[7], b.lambda),
            };
            p.validate()?;
            out.push(p);
        }
        Ok(out)
    }
}

/// A list to choose from uniformly, or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Choice<V> {
    Values(Vec<V>),
    Range { low: V, high: V },
}

trait Draw: Copy {
    fn in_range(low: Self, high: Self, rng: &mut ChaCha8Rng) -> Result<Self>;
}

impl Draw for usize {
    fn in_range(low: usize, high: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        if low > high {
            return Err(Error::invalid(format!("empty range {low}..={high}")));
        }
        Ok(rng.random_range(low..=high))
    }
}

impl Draw for f64 {
    fn in_range(low: f64, high: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
        if !(low <= high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::invalid(format!("empty range {low}..={high}")));
        }
        Ok(if low == high { low } else { rng.random_range(low..=high) })
    }
}

impl Draw for Option<usize> {
    fn in_range(low: Self, high: Self, rng: &mut ChaCha8Rng) -> Result<Self> {
        match (low, high) {
            (Some(l), Some(h)) => usize::in_range(l, h, rng).map(Some),
            _ => Err(Error::invalid("max_depth ranges need finite bounds")),
        }
    }
}

impl Draw for bool {
    fn in_range(_: bool, _: bool, _: &mut ChaCha8Rng) -> Result<bool> {
        Err(Error::invalid("bootstrap takes a list, not a range"))
    }
}

impl Draw for MaxFeatures {
    fn in_range(_: Self, _: Self, _: &mut ChaCha8Rng) -> Result<Self> {
        Err(Error::invalid("max_features takes a list, not a range"))
    }
}

fn draw<V: Draw>(choice: &Option<Choice<V>>, base: V, rng: &mut ChaCha8Rng) -> Result<V> {
    match choice {
        None => Ok(base),
        Some(Choice::Values(v)) if v.is_empty() => Err(Error::invalid("empty candidate list")),
        Some(Choice::Values(v)) => Ok(v[rng.random_range(0..v.len())]),
        Some(Choice::Range { low, high }) => V::in_range(*low, *high, rng),
    }
}

/// Per-parameter candidates. `None` keeps the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub n_estimators: Option<Choice<usize>>,
    pub max_depth: Option<Choice<Option<usize>>>,
    pub min_samples_split: Option<Choice<usize>>,
    pub min_samples_leaf: Option<Choice<usize>>,
    pub max_features: Option<Choice<MaxFeatures>>,
    pub bootstrap: Option<Choice<bool>>,
    pub learning_rate: Option<Choice<f64>>,
    pub lambda: Option<Choice<f64>>,
}

fn expand<V: Copy>(name: &str, c: &Option<Choice<V>>, range: impl Fn(V, V) -> Option<Vec<V>>) -> Result<Option<Vec<V>>> {
    match c {
        None => Ok(None),
        Some(Choice::Values(v)) => Ok(Some(v.clone())),
        Some(Choice::Range { low, high }) => range(*low, *high)
            .map(Some)
            .ok_or_else(|| Error::invalid(format!("{name}: range cannot be enumerated for a grid"))),
    }
}

fn int_range(low: usize, high: usize) -> Option<Vec<usize>> {
    (low <= high).then(|| (low..=high).collect())
}

impl SearchSpace {
    /// Forest space around the reference configuration of 120 trees and
    /// depth 12 with all features.
    pub fn forest_reference() -> Self {
        SearchSpace {
            n_estimators: Some(Choice::Range { low: 50, high: 200 }),
            max_depth: Some(Choice::Values(vec![Some(6), Some(8), Some(10), Some(12), Some(16), None])),
            min_samples_split: Some(Choice::Values(vec![2, 5, 10])),
            min_samples_leaf: Some(Choice::Values(vec![1, 2, 4])),
            max_features: Some(Choice::Values(vec![MaxFeatures::All, MaxFeatures::Sqrt])),
            ..Default::default()
        }
    }

    /// Default space for boosting; `lambda` is only searched when
    /// `regularized`.
    pub fn boosting_default(regularized: bool) -> Self {
        SearchSpace {
            n_estimators: Some(Choice::Range { low: 50, high: 200 }),
            max_depth: Some(Choice::Values(vec![Some(2), Some(3), Some(4), Some(5)])),
            min_samples_leaf: Some(Choice::Values(vec![1, 2, 4])),
            learning_rate: Some(Choice::Values(vec![0.05, 0.1, 0.2])),
            lambda: regularized.then(|| Choice::Values(vec![0.0, 1.0, 5.0])),
            ..Default::default()
        }
    }

    /// Default space for a single tree.
    pub fn tree_default() -> Self {
        SearchSpace {
            max_depth: Some(Choice::Values(vec![Some(4), Some(6), Some(8), Some(12), None])),
            min_samples_split: Some(Choice::Values(vec![2, 5, 10])),
            min_samples_leaf: Some(Choice::Values(vec![1, 2, 4, 8])),
            ..Default::default()
        }
    }

    /// Grid over the same candidates. Integer ranges are enumerated; real
    /// ranges are rejected.
    pub fn to_grid(&self, base: HyperParams) -> Result<ParamGrid> {
        let depth_range = |l: Option<usize>, h: Option<usize>| match (l, h) {
            (Some(l), Some(h)) => int_range(l, h).map(|v| v.into_iter().map(Some).collect()),
            _ => None,
        };
        Ok(ParamGrid {
            base,
            n_estimators: expand("n_estimators", &self.n_estimators, int_range)?,
            max_depth: expand("max_depth", &self.max_depth, depth_range)?,
            min_samples_split: expand("min_samples_split", &self.min_samples_split, int_range)?,
            min_samples_leaf: expand("min_samples_leaf", &self.min_samples_leaf, int_range)?,
            max_features: expand("max_features", &self.max_features, |_, _| None)?,
            bootstrap: expand("bootstrap", &self.bootstrap, |_, _| None)?,
            learning_rate: expand("learning_rate", &self.learning_rate, |_, _| None)?,
            lambda: expand("lambda", &self.lambda, |_, _| None)?,
        })
    }
}

/// Sampling space for randomized search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamDistribution {
    pub base: HyperParams,
    pub space: SearchSpace,
    pub n_iterations: usize,
    pub seed: u64,
}

impl Default for ParamDistribution {
    fn default() -> Self {
        ParamDistribution {
            base: HyperParams::default(),
            space: SearchSpace::default(),
            n_iterations: 60,
            seed: 0,
        }
    }
}

impl ParamDistribution {
    pub fn forest_reference() -> Self {
        ParamDistribution {
            space: SearchSpace::forest_reference(),
            ..Default::default()
        }
    }

    /// Draws `n_iterations` points (duplicates allowed). Fields are drawn
    /// in declaration order from a generator seeded with `seed`.
    pub fn sample(&self) -> Result<Vec<HyperParams>> {
        if self.n_iterations < 1 {
            return Err(Error::invalid("n_iterations must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (b, s) = (self.base, &self.space);
        (0..self.n_iterations)
            .map(|_| {
                let p = HyperParams {
                    n_estimators: draw(&s.n_estimators, b.n_estimators, &mut rng)?,
                    max_depth: draw(&s.max_depth, b.max_depth, &mut rng)?,
                    min_samples_split: draw(&s.min_samples_split, b.min_samples_split, &mut rng)?,
                    min_samples_leaf: draw(&s.min_samples_leaf, b.min_samples_leaf, &mut rng)?,
                    max_features: draw(&s.max_features, b.max_features, &mut rng)?,
                    bootstrap: draw(&s.bootstrap, b.bootstrap, &mut rng)?,
                    learning_rate: draw(&s.learning_rate, b.learning_rate, &mut rng)?,
                    lambda: draw(&s.lambda, b.lambda, &mut rng)?,
                };
                p.validate()?;
                Ok(p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Trial<T> {
    pub index: usize,
    pub params: HyperParams,
    /// Seed passed to [`cross_val_score`] for this trial.
    pub seed: u64,
    pub fold_scores: Vec<T>,
    pub mean_score: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SearchResult<T> {
    pub kind: ModelKind,
    pub scoring: Scoring,
    pub best_trial: usize,
    pub best_params: HyperParams,
    pub best_score: T,
    pub trials: Vec<Trial<T>>,
}

/// Scores every candidate with the same folds and keeps the highest mean
/// score; ties go to the earlier trial.
pub fn evaluate_candidates<T: Scalar>(
    kind: ModelKind,
    candidates: &[HyperParams],
    x: &DesignMatrix<T>,
    y: &[T],
    scheme: &CvScheme,
    scoring: Scoring,
    seed: u64,
) -> Result<SearchResult<T>> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates to search"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.n_rows(), y.len())));
    }
    let folds = k_fold_split(x.n_rows(), scheme)?;
    let trials = candidates
        .par_iter()
        .enumerate()
        .map(|(t, &params)| {
            let trial_seed = derive_seed(seed, t as u64);
            let spec = ModelSpec { kind, params };
            let fold_scores = score_folds(&spec, x, y, &folds, scoring, trial_seed)?;
            Ok(Trial {
                index: t,
                params,
                seed: trial_seed,
                mean_score: mean(&fold_scores),
                fold_scores,
            })
        })
        .collect::<Result<Vec<Trial<T>>>>()?;
    let mut best = 0;
    for (t, trial) in trials.iter().enumerate() {
        if trial.mean_score > trials[best].mean_score {
            best = t;
        }
    }
    log::info!(
        "search over {} trials: best trial {best}, score {}",
        trials.len(),
        trials[best].mean_score
    );
    Ok(SearchResult {
        kind,
        scoring,
        best_trial: best,
        best_params: trials[best].params,
        best_score: trials[best].mean_score,
        trials,
    })
}

/// Exhaustive search over the grid's Cartesian product.
pub fn grid_search<T: Scalar>(
    kind: ModelKind,
    grid: &ParamGrid,
    x: &DesignMatrix<T>,
    y: &[T],
    scheme: &CvScheme,
    scoring: Scoring,
    seed: u64,
) -> Result<SearchResult<T>> {
    evaluate_candidates(kind, &grid.points()?, x, y, scheme, scoring, seed)
}

/// Search over `dist.n_iterations` sampled points. Model seeds derive from
/// `dist.seed` as well.
pub fn randomized_search<T: Scalar>(
    kind: ModelKind,
    dist: &ParamDistribution,
    x: &DesignMatrix<T>,
    y: &[T],
    scheme: &CvScheme,
    scoring: Scoring,
) -> Result<SearchResult<T>> {
    let candidates = dist.sample()?;
    evaluate_candidates(kind, &candidates, x, y, scheme, scoring, derive_seed(dist.seed, u64::MAX))
}

impl<T: Scalar> SearchResult<T> {
    /// Trial log: `trial`, the eight hyperparameters, one column per fold,
    /// `mean`.
    pub fn write_trials_csv<W: Write>(&self, out: W) -> Result<()> {
        let k = self.trials.first().map_or(0, |t| t.fold_scores.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "trial",
            "n_estimators",
            "max_depth",
            "min_samples_split",
            "min_samples_leaf",
            "max_features",
            "bootstrap",
            "learning_rate",
            "lambda",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((0..k).map(|f| format!("fold_{f}")));
        header.push("mean".into());
        w.write_record(&header)?;
        for t in &self.trials {
            let p = &t.params;
            let mut rec = vec![
                t.index.to_string(),
                p.n_estimators.to_string(),
                p.max_depth.map_or("none".into(), |d| d.to_string()),
                p.min_samples_split.to_string(),
                p.min_samples_leaf.to_string(),
                p.max_features.to_string(),
                p.bootstrap.to_string(),
                p.learning_rate.to_string(),
                p.lambda.to_string(),
            ];
            rec.extend(t.fold_scores.iter().map(|s| s.to_string()));
            rec.push(t.mean_score.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<trial log>", e))?;
        Ok(())
    }

    pub fn save_trials_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_trials_csv(std::io::BufWriter::new(f))
    }
}
