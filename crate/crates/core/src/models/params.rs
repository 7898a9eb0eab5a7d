use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn count(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Fraction(f) => (f * n_features as f64).floor() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

impl std::fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::Fraction(v) => write!(f, "{v}"),
        }
    }
}

/// Learner family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Ordinary least squares.
    Lr,
    /// Single CART tree.
    Tree,
    /// Random forest.
    Rf,
    /// Least-squares gradient boosting.
    Gb,
    /// Gradient boosting with L2-regularised leaf weights.
    Xgb,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Tree => "tree",
            ModelKind::Rf => "rf",
            ModelKind::Gb => "gb",
            ModelKind::Xgb => "xgb",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Tree => "Tree",
            ModelKind::Rf => "RF",
            ModelKind::Gb => "GB",
            ModelKind::Xgb => "XGBoost",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lr" => Ok(ModelKind::Lr),
            "tree" => Ok(ModelKind::Tree),
            "rf" => Ok(ModelKind::Rf),
            "gb" => Ok(ModelKind::Gb),
            "xgb" => Ok(ModelKind::Xgb),
            other => Err(format!("unknown model `{other}` (expected lr, tree, rf, gb or xgb)")),
        }
    }
}

/// One point in hyperparameter space. Fields that a learner does not use
/// are ignored (`learning_rate` for forests, `bootstrap` for boosting).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub n_estimators: usize,
    /// `None` grows until the other limits stop it.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub learning_rate: f64,
    pub lambda: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self::forest_default()
    }
}

impl HyperParams {
    /// 100 fully grown trees on bootstrap samples, all features per split.
    pub fn forest_default() -> Self {
        HyperParams {
            n_estimators: 100,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            bootstrap: true,
            learning_rate: 0.1,
            lambda: 0.0,
        }
    }

    /// The tuned forest reference point: 120 trees, depth 12, no feature
    /// limit. Split/leaf minima stay at 2/1.
    pub fn forest_tuned_reference() -> Self {
        HyperParams {
            n_estimators: 120,
            max_depth: Some(12),
            ..Self::forest_default()
        }
    }

    /// 100 stages of depth-3 trees with learning rate 0.1.
    pub fn boosting_default() -> Self {
        HyperParams {
            n_estimators: 100,
            max_depth: Some(3),
            bootstrap: false,
            ..Self::forest_default()
        }
    }

    /// Boosting defaults with `lambda = 1`.
    pub fn regularized_boosting_default() -> Self {
        HyperParams {
            lambda: 1.0,
            ..Self::boosting_default()
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr | ModelKind::Rf => Self::forest_default(),
            ModelKind::Tree => HyperParams {
                n_estimators: 1,
                bootstrap: false,
                ..Self::forest_default()
            },
            ModelKind::Gb => Self::boosting_default(),
            ModelKind::Xgb => Self::regularized_boosting_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::invalid("n_estimators must be >= 1"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::invalid("min_samples_split must be >= 2"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::invalid("min_samples_leaf must be >= 1"));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid("max_features fraction must be in (0, 1]"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid("learning_rate must be in (0, 1]"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be a finite non-negative number"));
        }
        Ok(())
    }
}
