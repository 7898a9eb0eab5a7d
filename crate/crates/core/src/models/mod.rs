//! Regression learners, their common prediction interface, importances
//! and the JSON model format.

mod boost;
mod forest;
mod importance;
mod linear;
mod params;
mod serial;
mod tree;

pub use boost::{fit_gboost, fit_gboost_traced, BoostVariant, GradientBoostedEnsemble};
pub use forest::{fit_forest, predict_forest, tree_seed, RandomForest};
pub use importance::{feature_importances, impurity_importance, permutation_importance};
pub use linear::{fit_linear, predict_linear, LinearModel};
pub use params::{HyperParams, MaxFeatures, ModelKind};
pub use serial::{load_model, ModelDocument, FORMAT_VERSION};
pub use tree::{fit_tree, FlatTree, Node, RegressionTree};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::scalar::Scalar;

/// Anything that maps a design matrix to one prediction per row.
pub trait Regressor<T: Scalar>: Send + Sync {
    fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>>;
    fn n_features(&self) -> usize;
}

impl<T: Scalar> Regressor<T> for LinearModel<T> {
    fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        LinearModel::predict(self, x)
    }
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }
}

impl<T: Scalar> Regressor<T> for RegressionTree<T> {
    fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        RegressionTree::predict(self, x)
    }
    fn n_features(&self) -> usize {
        RegressionTree::n_features(self)
    }
}

impl<T: Scalar> Regressor<T> for RandomForest<T> {
    fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        RandomForest::predict(self, x)
    }
    fn n_features(&self) -> usize {
        RandomForest::n_features(self)
    }
}

impl<T: Scalar> Regressor<T> for GradientBoostedEnsemble<T> {
    fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        GradientBoostedEnsemble::predict(self, x)
    }
    fn n_features(&self) -> usize {
        GradientBoostedEnsemble::n_features(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelInner<T> {
    Linear(LinearModel<T>),
    Tree(RegressionTree<T>),
    Forest(RandomForest<T>),
    Boosted(GradientBoostedEnsemble<T>),
}

/// A fitted learner together with how it was fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub kind: ModelKind,
    pub params: HyperParams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub inner: ModelInner<T>,
}

/// Fits the learner named by `kind`. `Xgb` is boosting with leaf weights
/// regularised by `params.lambda`.
pub fn fit_model<T: Scalar>(
    kind: ModelKind,
    x: &DesignMatrix<T>,
    y: &[T],
    params: &HyperParams,
    seed: u64,
) -> Result<TrainedModel<T>> {
    let inner = match kind {
        ModelKind::Lr => ModelInner::Linear(fit_linear(x, y)?),
        ModelKind::Tree => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ModelInner::Tree(fit_tree(x, y, params, Some(&mut rng))?)
        }
        ModelKind::Rf => ModelInner::Forest(fit_forest(x, y, params, seed)?),
        ModelKind::Gb => ModelInner::Boosted(fit_gboost(x, y, params, seed, BoostVariant::Plain)?),
        ModelKind::Xgb => ModelInner::Boosted(fit_gboost(
            x,
            y,
            params,
            seed,
            BoostVariant::Regularized {
                lambda: params.lambda,
            },
        )?),
    };
    Ok(TrainedModel {
        kind,
        params: *params,
        seed,
        feature_names: x.column_names().to_vec(),
        inner,
    })
}

impl<T: Scalar> TrainedModel<T> {
    pub fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        match &self.inner {
            ModelInner::Linear(m) => m.predict(x),
            ModelInner::Tree(m) => m.predict(x),
            ModelInner::Forest(m) => m.predict(x),
            ModelInner::Boosted(m) => m.predict(x),
        }
    }

    /// Checks column names as well as the column count.
    pub fn predict_named(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        if x.column_names() != self.feature_names.as_slice() {
            return Err(Error::Shape("feature names differ from the training matrix".into()));
        }
        self.predict(x)
    }

    /// Trees of the model, empty for a linear model.
    pub fn trees(&self) -> &[RegressionTree<T>] {
        match &self.inner {
            ModelInner::Linear(_) => &[],
            ModelInner::Tree(t) => std::slice::from_ref(t),
            ModelInner::Forest(f) => f.trees(),
            ModelInner::Boosted(b) => b.stages(),
        }
    }
}

impl<T: Scalar> Regressor<T> for TrainedModel<T> {
    fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        TrainedModel::predict(self, x)
    }
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}
