//! Experiments built on the core: synthetic data, model comparison,
//! per-cluster linear fits, recursive forecasting and residual plots.

mod cluster;
mod compare;
mod forecast;
mod plots;
mod synth;

pub use cluster::{cluster_lr_analysis, ClusterFit, ClusterLrResult};
pub use compare::{compare_models, fingerprint, ComparisonReport, ComparisonRow, ModelEntry};
pub use forecast::{
    extend_history, forecast_recursive, save_forecast_csv, write_forecast_csv, ForecastRow, PromotionPlan,
};
pub use plots::{emit_residual_plots, scatter_svg, PlotFiles};
pub use synth::{generate_synthetic_sales, Components, SynthData, SynthModel, SynthSpec};
