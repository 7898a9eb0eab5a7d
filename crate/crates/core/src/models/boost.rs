use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::HyperParams;
use super::tree::{mean_exact, RegressionTree, TreeConfig};
use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoostVariant {
    Plain,
    /// Leaf weight `sum(residual) / (count + lambda)`.
    Regularized { lambda: f64 },
}

/// Stage-wise least-squares boosting.
///
/// Predictions accumulate as `F <- F + learning_rate * h_m(x)` starting from
/// `initial_prediction`, in stage order, both during fitting and at
/// inference, so training predictions are reproduced bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoostedEnsemble<T> {
    initial_prediction: T,
    stages: Vec<RegressionTree<T>>,
    learning_rate: T,
    variant: BoostVariant,
    n_features: usize,
}

fn sse<T: Scalar>(y: &[T], f: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    for (&a, &b) in y.iter().zip(f) {
        acc.add((a - b) * (a - b));
    }
    acc.value()
}

pub fn fit_gboost<T: Scalar>(
    x: &DesignMatrix<T>,
    y: &[T],
    params: &HyperParams,
    seed: u64,
    variant: BoostVariant,
) -> Result<GradientBoostedEnsemble<T>> {
    fit_gboost_traced(x, y, params, seed, variant).map(|(m, _)| m)
}

/// Like [`fit_gboost`], also returning the training SSE after the initial
/// prediction and after each stage (`n_estimators + 1` values).
pub fn fit_gboost_traced<T: Scalar>(
    x: &DesignMatrix<T>,
    y: &[T],
    params: &HyperParams,
    seed: u64,
    variant: BoostVariant,
) -> Result<(GradientBoostedEnsemble<T>, Vec<T>)> {
    params.validate()?;
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::invalid(format!(
            "learning_rate must lie in (0, 1], got {}",
            params.learning_rate
        )));
    }
    let n = x.n_rows();
    if n != y.len() {
        return Err(Error::Shape(format!("{n} rows vs {} targets", y.len())));
    }
    if n < 2 {
        return Err(Error::invalid("boosting needs at least two rows"));
    }
    if x.n_cols() == 0 {
        return Err(Error::NoFeatures);
    }
    let mut cfg = TreeConfig::from_params(params, x.n_cols());
    if let BoostVariant::Regularized { lambda } = variant {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
        }
        cfg.leaf_lambda = Some(T::from_f64_lossy(lambda));
    }
    let lr = T::from_f64_lossy(params.learning_rate);
    let columns = x.columns();
    let sample: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsample = cfg.features_per_split < x.n_cols();

    let (init, _, _) = mean_exact(y.iter().copied());
    let mut f = vec![init; n];
    let mut trace = vec![sse(y, &f)];
    let mut stages = Vec::with_capacity(params.n_estimators);
    let mut residual = vec![T::zero(); n];
    for _ in 0..params.n_estimators {
        for i in 0..n {
            residual[i] = y[i] - f[i];
        }
        let tree = RegressionTree::grow(
            &columns,
            &residual,
            &sample,
            cfg,
            if subsample { Some(&mut rng) } else { None },
        )?;
        for (i, fi) in f.iter_mut().enumerate() {
            *fi = *fi + lr * tree.predict_row(x.row(i));
        }
        trace.push(sse(y, &f));
        stages.push(tree);
    }
    Ok((
        GradientBoostedEnsemble {
            initial_prediction: init,
            stages,
            learning_rate: lr,
            variant,
            n_features: x.n_cols(),
        },
        trace,
    ))
}

impl<T: Scalar> GradientBoostedEnsemble<T> {
    pub fn from_parts(
        initial_prediction: T,
        stages: Vec<RegressionTree<T>>,
        learning_rate: T,
        variant: BoostVariant,
        n_features: usize,
    ) -> Result<Self> {
        if stages.iter().any(|t| t.n_features() != n_features) {
            return Err(Error::invalid("stage feature count mismatch"));
        }
        Ok(GradientBoostedEnsemble {
            initial_prediction,
            stages,
            learning_rate,
            variant,
            n_features,
        })
    }

    pub fn initial_prediction(&self) -> T {
        self.initial_prediction
    }

    pub fn stages(&self) -> &[RegressionTree<T>] {
        &self.stages
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn learning_rate(&self) -> T {
        self.learning_rate
    }

    pub fn variant(&self) -> BoostVariant {
        self.variant
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict_row(&self, row: &[T]) -> T {
        self.predict_row_staged(row, self.stages.len())
    }

    fn predict_row_staged(&self, row: &[T], n_stages: usize) -> T {
        self.stages[..n_stages]
            .iter()
            .fold(self.initial_prediction, |acc, t| {
                acc + self.learning_rate * t.predict_row(row)
            })
    }

    pub fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        self.predict_staged(x, self.stages.len())
    }

    /// Prediction using only the first `n_stages` stages.
    pub fn predict_staged(&self, x: &DesignMatrix<T>, n_stages: usize) -> Result<Vec<T>> {
        if x.n_cols() != self.n_features {
            return Err(Error::Shape(format!(
                "ensemble expects {} features, got {}",
                self.n_features,
                x.n_cols()
            )));
        }
        if n_stages > self.stages.len() {
            return Err(Error::invalid(format!(
                "ensemble has {} stages, asked for {n_stages}",
                self.stages.len()
            )));
        }
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_row_staged(x.row(i), n_stages))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::Node;
    use rand::Rng;

    fn params(n: usize, depth: Option<usize>, lr: f64) -> HyperParams {
        HyperParams {
            n_estimators: n,
            max_depth: depth,
            learning_rate: lr,
            ..HyperParams::boosting_default()
        }
    }

    fn data(seed: u64, n: usize) -> (DesignMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| r[0].sin() * 5.0 + r[1] * r[1] + rng.random_range(-0.5..0.5))
            .collect();
        (DesignMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn constant_target() {
        let x = DesignMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = vec![4.25; 3];
        let m = fit_gboost(&x, &y, &params(5, Some(3), 0.1), 0, BoostVariant::Plain).unwrap();
        assert_eq!(m.initial_prediction(), 4.25);
        for t in m.stages() {
            assert!(t.nodes().iter().all(|n| n.value() == 0.0));
        }
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn depth_zero_stage_adds_nothing() {
        let (x, y) = data(1, 40);
        let m = fit_gboost(&x, &y, &params(1, Some(0), 1.0), 0, BoostVariant::Plain).unwrap();
        let mean = m.initial_prediction();
        for p in m.predict(&x).unwrap() {
            assert!((p - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn sse_trace_matches_recomputation_and_decreases() {
        let (x, y) = data(2, 120);
        let (m, trace) = fit_gboost_traced(&x, &y, &params(30, Some(2), 0.3), 0, BoostVariant::Plain).unwrap();
        assert_eq!(trace.len(), 31);
        for k in 0..=30 {
            let p = m.predict_staged(&x, k).unwrap();
            let naive: f64 = y.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!((naive - trace[k]).abs() <= 1e-9 * trace[0]);
        }
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn unit_rate_unlimited_depth_interpolates() {
        let (x, y) = data(3, 100);
        let (_, trace) = fit_gboost_traced(&x, &y, &params(100, None, 1.0), 0, BoostVariant::Plain).unwrap();
        assert_eq!(*trace.last().unwrap(), 0.0);
    }

    #[test]
    fn regularized_leaves_shrink() {
        let (x, y) = data(4, 80);
        let leaves = |lambda: f64| -> Vec<f64> {
            let m = fit_gboost(&x, &y, &params(1, Some(3), 0.1), 0, BoostVariant::Regularized { lambda }).unwrap();
            m.stages()[0]
                .nodes()
                .iter()
                .filter_map(|n| match n {
                    Node::Leaf { value, .. } => Some(*value),
                    _ => None,
                })
                .collect()
        };
        let (a, b, c) = (leaves(0.0), leaves(1.0), leaves(10.0));
        assert_eq!(a.len(), c.len());
        for i in 0..a.len() {
            assert!(b[i].abs() <= a[i].abs() && c[i].abs() <= b[i].abs());
        }
        let plain = fit_gboost(&x, &y, &params(1, Some(3), 0.1), 0, BoostVariant::Plain).unwrap();
        let zero = fit_gboost(&x, &y, &params(1, Some(3), 0.1), 0, BoostVariant::Regularized { lambda: 0.0 }).unwrap();
        assert_eq!(plain.predict(&x).unwrap(), zero.predict(&x).unwrap());
    }

    #[test]
    fn invalid_params() {
        let (x, y) = data(5, 10);
        assert!(fit_gboost(&x, &y, &params(3, Some(2), 0.0), 0, BoostVariant::Plain).is_err());
        assert!(fit_gboost(&x, &y, &params(3, Some(2), 1.5), 0, BoostVariant::Plain).is_err());
        assert!(fit_gboost(&x, &y, &params(3, Some(2), 0.1), 0, BoostVariant::Regularized { lambda: -1.0 }).is_err());
        let one = x.select_rows(&[0]);
        assert!(fit_gboost(&one, &y[..1], &params(3, Some(2), 0.1), 0, BoostVariant::Plain).is_err());
    }
}
