use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::date::{date_parts, DATE_FEATURES};
use super::encode::{one_hot_encode, one_hot_transform, split_xy, EncodingMap, TargetVector};
use super::frame::{ColumnData, Frame};
use super::join::{join_metadata, JoinOptions};
use super::lags::add_lag_features;
use super::split::{train_test_split, SplitIndices, SplitMode};
use crate::error::{Error, Result};
use crate::ingest::{
    drop_duplicates, impute_missing, CategoricalStrategy, Metadata, NumericStrategy, RawTable,
    SalesRecord,
};
use crate::matrix::DesignMatrix;

/// Columns expanded into indicators.
pub const CATEGORICAL_COLUMNS: [&str; 4] = ["store_nbr", "family", "cluster", "store_type"];

/// Flat pipeline configuration; every key has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub numeric_strategy: NumericStrategy,
    pub lags: Vec<usize>,
    pub test_fraction: f64,
    pub seed: u64,
    pub split_mode: SplitMode,
    pub interaction_features: bool,
    pub regional_holidays: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            numeric_strategy: NumericStrategy::Mean,
            lags: vec![1],
            test_fraction: 0.2,
            seed: 1,
            split_mode: SplitMode::Random,
            interaction_features: false,
            regional_holidays: false,
        }
    }
}

impl PipelineConfig {
    fn join_options(&self) -> JoinOptions {
        JoinOptions {
            regional_holidays: self.regional_holidays,
            interaction_features: self.interaction_features,
        }
    }

    pub fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepSummary {
    pub rows_loaded: usize,
    pub cells_imputed: usize,
    pub duplicates_removed: usize,
    pub lag_rows_dropped: usize,
    pub rows_out: usize,
    pub n_features: usize,
}

/// What a fitted pipeline needs to encode new rows identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub encoding: EncodingMap,
    pub feature_names: Vec<String>,
}

/// Design matrix plus the row-aligned context needed downstream.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub x: DesignMatrix<f64>,
    pub y: TargetVector,
    pub dates: Vec<NaiveDate>,
    pub stores: Vec<u32>,
    pub families: Vec<String>,
    pub clusters: Vec<u32>,
    /// Cleaned records (after imputation and deduplication, before lag drop).
    pub records: Vec<SalesRecord>,
    pub pipeline: FittedPipeline,
    pub summary: PrepSummary,
}

impl Prepared {
    pub fn split(&self) -> Result<SplitIndices> {
        let c = &self.pipeline.config;
        train_test_split(self.y.len(), c.test_fraction, c.seed, c.split_mode, Some(&self.dates))
    }

    pub fn select_y(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.y[i]).collect()
    }
}

/// Appends calendar columns derived from the `date` column.
pub fn append_date_features(frame: &mut Frame) -> Result<()> {
    let parts: Vec<[f64; 4]> = frame.dates("date")?.iter().map(|&d| date_parts(d)).collect();
    for (j, name) in DATE_FEATURES.iter().enumerate() {
        frame.push(*name, ColumnData::Numeric(parts.iter().map(|p| p[j]).collect()))?;
    }
    Ok(())
}

/// Join, calendar features, then drop the date. Shared by fit and transform.
fn finish_frame(frame: &Frame, meta: &Metadata, config: &PipelineConfig) -> Result<(Frame, Vec<NaiveDate>)> {
    let mut joined = join_metadata(frame, meta, config.join_options())?;
    append_date_features(&mut joined)?;
    let dates = match joined.remove("date")? {
        ColumnData::Date(d) => d,
        _ => unreachable!("date column has date type"),
    };
    Ok((joined, dates))
}

/// Cleans raw rows and builds the design matrix: imputation, deduplication,
/// lag features, metadata join, calendar features, one-hot encoding.
pub fn prepare(raw: RawTable, meta: &Metadata, config: &PipelineConfig) -> Result<Prepared> {
    let mut summary = PrepSummary {
        rows_loaded: raw.len(),
        cells_imputed: raw.missing_count(),
        ..Default::default()
    };
    let table = impute_missing(raw, config.numeric_strategy, CategoricalStrategy::Mode)?;
    let before = table.len();
    let table = drop_duplicates(table);
    summary.duplicates_removed = before - table.len();
    let records = table.into_records()?;

    let lagged = add_lag_features(&Frame::from_records(&records), &config.lags)?;
    summary.lag_rows_dropped = lagged.dropped;
    if lagged.frame.n_rows() == 0 {
        return Err(Error::Empty("no rows left after lag features"));
    }
    let (frame, dates) = finish_frame(&lagged.frame, meta, config)?;
    let clusters = frame
        .categorical("cluster")?
        .iter()
        .map(|c| c.parse().expect("cluster ids are integers"))
        .collect();
    let (xf, y) = split_xy(&frame, "sales")?;
    let (x, encoding) = one_hot_encode(&xf, &CATEGORICAL_COLUMNS)?;

    let kept: Vec<&SalesRecord> = lagged.kept_rows.iter().map(|&i| &records[i]).collect();
    summary.rows_out = x.n_rows();
    summary.n_features = x.n_cols();
    Ok(Prepared {
        stores: kept.iter().map(|r| r.store_nbr).collect(),
        families: kept.iter().map(|r| r.family.clone()).collect(),
        dates,
        clusters,
        pipeline: FittedPipeline {
            config: config.clone(),
            encoding,
            feature_names: x.column_names().to_vec(),
        },
        x,
        y,
        records,
        summary,
    })
}

impl FittedPipeline {
    /// Encodes rows whose lag columns are already present (as produced by
    /// [`add_lag_features`] or built by the forecaster). A `sales` column,
    /// if present, is ignored.
    pub fn transform(&self, frame: &Frame, meta: &Metadata) -> Result<DesignMatrix<f64>> {
        let (mut f, _) = finish_frame(frame, meta, &self.config)?;
        if f.get("sales").is_ok() {
            f.remove("sales")?;
        }
        let x = one_hot_transform(&f, &self.encoding)?;
        if x.column_names() != self.feature_names.as_slice() {
            return Err(Error::Shape(format!(
                "transformed columns differ from fit-time columns ({} vs {})",
                x.n_cols(),
                self.feature_names.len()
            )));
        }
        Ok(x)
    }
}
