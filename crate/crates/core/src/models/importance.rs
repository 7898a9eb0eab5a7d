use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::RegressionTree;
use super::{Regressor, TrainedModel};
use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::metrics::Metric;
use crate::scalar::Scalar;

/// Total SSE decrease per feature over all trees, normalised to sum to 1.
/// All zeros when no tree has a split.
pub fn impurity_importance<T: Scalar>(trees: &[RegressionTree<T>], n_features: usize) -> Result<Vec<T>> {
    if trees.is_empty() {
        return Err(Error::NotFitted);
    }
    let mut acc = vec![T::zero(); n_features];
    for t in trees {
        if t.n_features() != n_features {
            return Err(Error::Shape("trees disagree on feature count".into()));
        }
        t.accumulate_importance(&mut acc);
    }
    let total = acc.iter().fold(T::zero(), |a, &v| a + v);
    if total > T::zero() {
        for v in &mut acc {
            *v = *v / total;
        }
    }
    Ok(acc)
}

/// Impurity importance of a tree-based model. Linear models have none.
pub fn feature_importances<T: Scalar>(model: &TrainedModel<T>) -> Result<Vec<T>> {
    if matches!(model.inner, super::ModelInner::Linear(_)) {
        return Err(Error::invalid("impurity importance needs a tree-based model"));
    }
    impurity_importance(model.trees(), model.feature_names.len())
}

/// Mean increase in `metric` (as a loss) when one column is shuffled,
/// over `n_repeats` shuffles. Feature `j` shuffles with its own stream of
/// a generator seeded by `seed`.
pub fn permutation_importance<T: Scalar, M: Regressor<T> + ?Sized>(
    model: &M,
    x: &DesignMatrix<T>,
    y: &[T],
    metric: Metric,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if n_repeats < 1 {
        return Err(Error::invalid("n_repeats must be at least 1"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.n_rows(), y.len())));
    }
    let baseline = metric.loss(y, &model.predict(x)?)?;
    let reps = <T as Scalar>::from_usize(n_repeats);
    let mut out = Vec::with_capacity(x.n_cols());
    let mut work = x.clone();
    for j in 0..x.n_cols() {
        let original = x.column(j);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let mut total = T::zero();
        let mut col = original.clone();
        for _ in 0..n_repeats {
            col.copy_from_slice(&original);
            col.shuffle(&mut rng);
            for (i, &v) in col.iter().enumerate() {
                work.set(i, j, v);
            }
            total = total + (metric.loss(y, &model.predict(&work)?)? - baseline);
        }
        for (i, &v) in original.iter().enumerate() {
            work.set(i, j, v);
        }
        out.push(total / reps);
    }
    Ok(out)
}
