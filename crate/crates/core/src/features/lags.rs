use std::collections::BTreeMap;

use super::frame::{ColumnData, Frame};
use crate::error::{Error, Result};

pub fn lag_column_name(lag: usize) -> String {
    format!("sales_lag_{lag}")
}

/// Result of [`add_lag_features`].
#[derive(Debug, Clone)]
pub struct LaggedFrame {
    pub frame: Frame,
    /// Rows removed because at least one lag reached before the series start.
    pub dropped: usize,
    /// Original row index of every surviving row.
    pub kept_rows: Vec<usize>,
}

/// Row indices grouped by `(store_nbr, family)`, each group sorted by date
/// (stable for equal dates).
pub(crate) fn series_groups(frame: &Frame) -> Result<BTreeMap<(String, String), Vec<usize>>> {
    let stores = frame.categorical("store_nbr")?;
    let families = frame.categorical("family")?;
    let dates = frame.dates("date")?;
    let mut groups: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for i in 0..frame.n_rows() {
        groups
            .entry((stores[i].clone(), families[i].clone()))
            .or_default()
            .push(i);
    }
    for rows in groups.values_mut() {
        rows.sort_by_key(|&i| dates[i]);
    }
    Ok(groups)
}

/// Adds `sales_lag_k` for each requested `k`: the sales value `k` rows
/// earlier in the same `(store_nbr, family)` series ordered by date.
/// Rows without a full lag history are dropped; surviving rows keep their
/// input order.
pub fn add_lag_features(frame: &Frame, lags: &[usize]) -> Result<LaggedFrame> {
    if let Some(bad) = lags.iter().find(|&&k| k == 0) {
        return Err(Error::invalid(format!("lag must be positive, got {bad}")));
    }
    if lags.is_empty() {
        return Ok(LaggedFrame {
            frame: frame.clone(),
            dropped: 0,
            kept_rows: (0..frame.n_rows()).collect(),
        });
    }
    let sales = frame.numeric("sales")?;
    let max_lag = *lags.iter().max().expect("non-empty");

    let mut lag_values = vec![vec![f64::NAN; frame.n_rows()]; lags.len()];
    let mut keep = vec![false; frame.n_rows()];
    for rows in series_groups(frame)?.values() {
        for (pos, &row) in rows.iter().enumerate().skip(max_lag) {
            keep[row] = true;
            for (j, &k) in lags.iter().enumerate() {
                lag_values[j][row] = sales[rows[pos - k]];
            }
        }
    }

    let kept_rows: Vec<usize> = (0..frame.n_rows()).filter(|&i| keep[i]).collect();
    let mut out = frame.select_rows(&kept_rows);
    for (j, &k) in lags.iter().enumerate() {
        let col = kept_rows.iter().map(|&i| lag_values[j][i]).collect();
        out.push(lag_column_name(k), ColumnData::Numeric(col))?;
    }
    let dropped = frame.n_rows() - kept_rows.len();
    if dropped > 0 {
        log::info!("lag features: dropped {dropped} rows without full history");
    }
    Ok(LaggedFrame {
        frame: out,
        dropped,
        kept_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SalesRecord;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn rec(store: u32, family: &str, day: u32, sales: f64) -> SalesRecord {
        SalesRecord {
            id: 0,
            date: NaiveDate::from_ymd_opt(2017, 1, day).unwrap(),
            store_nbr: store,
            family: family.into(),
            sales,
            onpromotion: 0,
        }
    }

    #[test]
    fn single_lag_shifts_and_drops_first_row() {
        let f = Frame::from_records(&[rec(1, "A", 1, 5.0), rec(1, "A", 2, 7.0), rec(1, "A", 3, 9.0)]);
        let out = add_lag_features(&f, &[1]).unwrap();
        assert_eq!(out.dropped, 1);
        assert_eq!(out.frame.numeric("sales_lag_1").unwrap(), &[5.0, 7.0]);
        assert_eq!(out.frame.numeric("sales").unwrap(), &[7.0, 9.0]);
    }

    #[test]
    fn no_leak_across_stores() {
        let f = Frame::from_records(&[rec(1, "A", 1, 5.0), rec(2, "A", 2, 7.0)]);
        let out = add_lag_features(&f, &[1]).unwrap();
        assert_eq!(out.dropped, 2);
        assert_eq!(out.frame.n_rows(), 0);
    }

    #[test]
    fn two_lags_keep_only_third_row() {
        // rows deliberately out of date order
        let f = Frame::from_records(&[rec(1, "A", 3, 9.0), rec(1, "A", 1, 5.0), rec(1, "A", 2, 7.0)]);
        let out = add_lag_features(&f, &[1, 2]).unwrap();
        assert_eq!(out.kept_rows, vec![0]);
        assert_eq!(out.frame.numeric("sales_lag_1").unwrap(), &[7.0]);
        assert_eq!(out.frame.numeric("sales_lag_2").unwrap(), &[5.0]);
    }

    #[test]
    fn zero_lag_rejected() {
        let f = Frame::from_records(&[rec(1, "A", 1, 5.0)]);
        assert!(matches!(add_lag_features(&f, &[0]), Err(Error::InvalidArgument(_))));
    }

    fn lag_map(records: &[SalesRecord]) -> BTreeMap<(u32, String, NaiveDate), Vec<f64>> {
        let f = Frame::from_records(records);
        let out = add_lag_features(&f, &[1, 3]).unwrap();
        let l1 = out.frame.numeric("sales_lag_1").unwrap();
        let l3 = out.frame.numeric("sales_lag_3").unwrap();
        out.kept_rows
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                let r = &records[i];
                ((r.store_nbr, r.family.clone(), r.date), vec![l1[j], l3[j]])
            })
            .collect()
    }

    proptest! {
        #[test]
        fn permuting_series_order_keeps_lags(
            sales in prop::collection::vec(0.0f64..100.0, 24),
            perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            // four series of six days each
            let series: Vec<Vec<SalesRecord>> = (0..4)
                .map(|s| (0..6).map(|d| rec(1 + s as u32 % 2, if s < 2 { "A" } else { "B" }, d + 1, sales[s * 6 + d as usize])).collect())
                .collect();
            let original: Vec<_> = series.concat();
            let shuffled: Vec<_> = perm.iter().flat_map(|&s| series[s].clone()).collect();
            prop_assert_eq!(lag_map(&original), lag_map(&shuffled));
        }
    }
}
