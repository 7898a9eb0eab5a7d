use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{lag_column_name, ColumnData, FittedPipeline, Frame};
use crate::ingest::{Metadata, SalesRecord};
use crate::models::Regressor;

/// Promotion counts for future days, keyed by `(date, store, family)`.
/// Missing keys mean no promotion.
pub type PromotionPlan = BTreeMap<(NaiveDate, u32, String), u32>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub store_nbr: u32,
    pub family: String,
    pub onpromotion: u32,
    pub prediction: f64,
}

/// Predicts `horizon` days after the last date in `history`, one day at a
/// time. Lag features for day `d` come from the history extended by the
/// predictions for days before `d`. Rows are ordered by date, then store,
/// then family.
pub fn forecast_recursive<M: Regressor<f64> + ?Sized>(
    model: &M,
    history: &[SalesRecord],
    meta: &Metadata,
    pipeline: &FittedPipeline,
    horizon: usize,
    promotions: Option<&PromotionPlan>,
) -> Result<Vec<ForecastRow>> {
    if horizon == 0 {
        return Ok(Vec::new());
    }
    let last = history
        .iter()
        .map(|r| r.date)
        .max()
        .ok_or_else(|| Error::InsufficientHistory("history is empty".into()))?;
    let lags = &pipeline.config.lags;
    let max_lag = pipeline.config.max_lag();

    let mut series: BTreeMap<(u32, String), Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for r in history {
        series
            .entry((r.store_nbr, r.family.clone()))
            .or_default()
            .push((r.date, r.sales));
    }
    for ((store, family), values) in series.iter_mut() {
        if values.len() < max_lag {
            return Err(Error::InsufficientHistory(format!(
                "store {store}, family {family}: {} days for lag {max_lag}",
                values.len()
            )));
        }
        values.sort_by_key(|&(d, _)| d);
    }

    let mut out = Vec::with_capacity(horizon * series.len());
    for step in 1..=horizon {
        let date = last + Duration::days(step as i64);
        let keys: Vec<(u32, String)> = series.keys().cloned().collect();
        let promo: Vec<u32> = keys
            .iter()
            .map(|(s, f)| {
                promotions
                    .and_then(|p| p.get(&(date, *s, f.clone())).copied())
                    .unwrap_or(0)
            })
            .collect();
        let records: Vec<SalesRecord> = keys
            .iter()
            .zip(&promo)
            .map(|((s, f), &p)| SalesRecord {
                id: 0,
                date,
                store_nbr: *s,
                family: f.clone(),
                sales: 0.0,
                onpromotion: p,
            })
            .collect();
        let mut frame = Frame::from_records(&records);
        for &k in lags {
            let col = keys
                .iter()
                .map(|key| {
                    let v = &series[key];
                    v[v.len() - k].1
                })
                .collect();
            frame.push(lag_column_name(k), ColumnData::Numeric(col))?;
        }
        let x = pipeline.transform(&frame, meta)?;
        let pred = model.predict(&x)?;
        for ((key, p), value) in keys.into_iter().zip(promo).zip(pred) {
            series.get_mut(&key).expect("known series").push((date, value));
            out.push(ForecastRow {
                date,
                store_nbr: key.0,
                family: key.1,
                onpromotion: p,
                prediction: value,
            });
        }
    }
    Ok(out)
}

/// `history` followed by the forecast rows as sales records, with ids
/// continuing after the largest history id.
pub fn extend_history(history: &[SalesRecord], forecast: &[ForecastRow]) -> Vec<SalesRecord> {
    let next = history.iter().map(|r| r.id + 1).max().unwrap_or(0);
    let mut out = history.to_vec();
    out.extend(forecast.iter().enumerate().map(|(i, f)| SalesRecord {
        id: next + i as u64,
        date: f.date,
        store_nbr: f.store_nbr,
        family: f.family.clone(),
        sales: f.prediction,
        onpromotion: f.onpromotion,
    }));
    out
}

pub fn write_forecast_csv<W: Write>(rows: &[ForecastRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["date", "store_nbr", "family", "onpromotion", "prediction"])?;
    for r in rows {
        out.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.store_nbr.to_string(),
            r.family.clone(),
            r.onpromotion.to_string(),
            r.prediction.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv writer>", e))
}

pub fn save_forecast_csv(rows: &[ForecastRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_forecast_csv(rows, std::io::BufWriter::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::{generate_synthetic_sales, SynthSpec};
    use crate::features::{prepare, PipelineConfig};
    use crate::ingest::RawTable;
    use crate::matrix::DesignMatrix;

    struct Constant(f64, usize);

    impl Regressor<f64> for Constant {
        fn predict(&self, x: &DesignMatrix<f64>) -> Result<Vec<f64>> {
            Ok(vec![self.0; x.n_rows()])
        }
        fn n_features(&self) -> usize {
            self.1
        }
    }

    fn setup() -> (Vec<SalesRecord>, Metadata, FittedPipeline) {
        let spec = SynthSpec { n_stores: 2, n_families: 3, n_days: 20, ..Default::default() };
        let data = generate_synthetic_sales(&spec).unwrap();
        let config = PipelineConfig { lags: vec![1, 7], ..Default::default() };
        let p = prepare(RawTable::from_clean(data.sales.clone()), &data.meta, &config).unwrap();
        (data.sales, data.meta, p.pipeline)
    }

    #[test]
    fn constant_model() {
        let (hist, meta, pipe) = setup();
        let m = Constant(7.0, pipe.feature_names.len());
        assert!(forecast_recursive(&m, &hist, &meta, &pipe, 0, None).unwrap().is_empty());
        let rows = forecast_recursive(&m, &hist, &meta, &pipe, 15, None).unwrap();
        assert_eq!(rows.len(), 15 * 6);
        assert!(rows.iter().all(|r| r.prediction == 7.0));
        assert_eq!(rows[0].date, NaiveDate::from_ymd_opt(2016, 1, 21).unwrap());
        assert_eq!(rows.last().unwrap().date, NaiveDate::from_ymd_opt(2016, 2, 4).unwrap());
    }

    #[test]
    fn short_history_is_rejected() {
        let (hist, meta, pipe) = setup();
        let m = Constant(1.0, pipe.feature_names.len());
        let short: Vec<SalesRecord> = hist.iter().filter(|r| r.date < NaiveDate::from_ymd_opt(2016, 1, 4).unwrap()).cloned().collect();
        assert!(matches!(
            forecast_recursive(&m, &short, &meta, &pipe, 3, None),
            Err(Error::InsufficientHistory(_))
        ));
        assert!(forecast_recursive(&m, &[], &meta, &pipe, 3, None).is_err());
    }

    #[test]
    fn extend_history_ids() {
        let (hist, _, _) = setup();
        let f = vec![ForecastRow {
            date: NaiveDate::from_ymd_opt(2016, 1, 21).unwrap(),
            store_nbr: 1,
            family: "BEVERAGES".into(),
            onpromotion: 0,
            prediction: 3.5,
        }];
        let ext = extend_history(&hist, &f);
        assert_eq!(ext.len(), hist.len() + 1);
        assert_eq!(ext.last().unwrap().id, hist.len() as u64);
        assert_eq!(ext.last().unwrap().sales, 3.5);
    }
}
