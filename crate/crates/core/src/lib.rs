//! Retail sales forecasting toolkit.
//!
//! The numeric core ([`matrix`], [`models`], [`metrics`], [`tuning`]) is
//! generic over [`Scalar`] (`f32` or `f64`). Data loading and feature
//! engineering work in `f64`; the aliases below name the double-precision
//! instantiations used by the pipeline and the CLI.

pub mod bench;
pub mod error;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod scalar;
pub mod tuning;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FeatureMatrix = matrix::DesignMatrix<f64>;
pub type FeatureMatrix32 = matrix::DesignMatrix<f32>;
pub type LinearRegression = models::LinearModel<f64>;
pub type Tree = models::RegressionTree<f64>;
pub type Forest = models::RandomForest<f64>;
pub type Boosted = models::GradientBoostedEnsemble<f64>;
pub type Model = models::TrainedModel<f64>;
pub type Params = models::HyperParams;
pub type Report = metrics::EvaluationReport<f64>;
pub type Search = tuning::SearchResult<f64>;
