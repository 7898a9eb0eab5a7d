//! From cleaned sales rows to a numeric design matrix and target vector.

mod date;
mod encode;
mod frame;
mod join;
mod lags;
mod pipeline;
mod split;

pub use date::{date_parts, extract_date_features, DATE_FEATURES};
pub use encode::{one_hot_encode, one_hot_name, one_hot_transform, split_xy, EncodingMap, TargetVector};
pub use frame::{Column, ColumnData, Frame};
pub use join::{join_metadata, JoinOptions, OilSeries, INTERACTION_COLUMN};
pub use lags::{add_lag_features, lag_column_name, LaggedFrame};
pub use pipeline::{
    append_date_features, prepare, FittedPipeline, PrepSummary, Prepared, PipelineConfig,
    CATEGORICAL_COLUMNS,
};
pub use split::{train_test_split, SplitIndices, SplitMode};
