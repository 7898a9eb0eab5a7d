use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::params::HyperParams;
use super::tree::{RegressionTree, TreeConfig};
use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::scalar::Scalar;

/// Bagged CART trees; prediction is the plain mean over trees.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest<T> {
    trees: Vec<RegressionTree<T>>,
    params: HyperParams,
    seed: u64,
}

/// Seed of tree `index` in a forest fitted with `seed`.
pub fn tree_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Fits `n_estimators` trees. Tree `t` draws its bootstrap sample and its
/// per-split feature subsets from a generator seeded with `seed + t`, so
/// the result does not depend on thread scheduling.
pub fn fit_forest<T: Scalar>(
    x: &DesignMatrix<T>,
    y: &[T],
    params: &HyperParams,
    seed: u64,
) -> Result<RandomForest<T>> {
    params.validate()?;
    let n = x.n_rows();
    if n != y.len() {
        return Err(Error::Shape(format!("{n} rows vs {} targets", y.len())));
    }
    if n < 2 {
        return Err(Error::invalid("forest needs at least two rows"));
    }
    if x.n_cols() == 0 {
        return Err(Error::NoFeatures);
    }
    let columns = x.columns();
    let cfg = TreeConfig::from_params(params, x.n_cols());
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
            let sample: Vec<usize> = if params.bootstrap {
                let mut s: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                s.sort_unstable();
                s
            } else {
                (0..n).collect()
            };
            RegressionTree::grow(&columns, y, &sample, cfg, Some(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        params: *params,
        seed,
    })
}

impl<T: Scalar> RandomForest<T> {
    pub fn from_trees(trees: Vec<RegressionTree<T>>, params: HyperParams, seed: u64) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::NotFitted);
        }
        let p = trees[0].n_features();
        if trees.iter().any(|t| t.n_features() != p) {
            return Err(Error::invalid("trees disagree on feature count"));
        }
        Ok(RandomForest { trees, params, seed })
    }

    pub fn trees(&self) -> &[RegressionTree<T>] {
        &self.trees
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    pub fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::Shape(format!(
                "forest expects {} features, got {}",
                self.n_features(),
                x.n_cols()
            )));
        }
        let k = <T as Scalar>::from_usize(self.trees.len());
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                self.trees
                    .iter()
                    .fold(T::zero(), |acc, t| acc + t.predict_row(row))
                    / k
            })
            .collect())
    }
}

pub fn predict_forest<T: Scalar>(forest: &RandomForest<T>, x: &DesignMatrix<T>) -> Result<Vec<T>> {
    forest.predict(x)
}
