use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::records::RawTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericStrategy {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoricalStrategy {
    #[default]
    Mode,
}

fn numeric_fill(values: &[Option<f64>], strategy: NumericStrategy) -> Option<f64> {
    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    Some(match strategy {
        NumericStrategy::Mean => crate::scalar::stable_sum(present.iter().copied()) / present.len() as f64,
        NumericStrategy::Median => {
            present.sort_by(f64::total_cmp);
            let mid = present.len() / 2;
            if present.len() % 2 == 1 {
                present[mid]
            } else {
                0.5 * (present[mid - 1] + present[mid])
            }
        }
    })
}

/// Most frequent label; ties go to the lexicographically smallest.
fn mode<'a, I: IntoIterator<Item = &'a str>>(labels: I) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (label, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((label, n));
        }
    }
    best.map(|(l, _)| l.to_string())
}

/// Fills every missing cell. Numeric columns (`sales`, `onpromotion`) use
/// the chosen strategy; `onpromotion` is rounded to the nearest count.
/// `family` uses the mode. Present values are never touched.
pub fn impute_missing(
    mut table: RawTable,
    numeric: NumericStrategy,
    categorical: CategoricalStrategy,
) -> Result<RawTable> {
    let CategoricalStrategy::Mode = categorical;

    if table.records.iter().any(|r| r.sales.is_none()) {
        let col: Vec<_> = table.records.iter().map(|r| r.sales).collect();
        let fill = numeric_fill(&col, numeric).ok_or_else(|| Error::EmptyColumn("sales".into()))?;
        for r in &mut table.records {
            r.sales.get_or_insert(fill);
        }
    }

    if table.records.iter().any(|r| r.onpromotion.is_none()) {
        let col: Vec<_> = table
            .records
            .iter()
            .map(|r| r.onpromotion.map(f64::from))
            .collect();
        let fill = numeric_fill(&col, numeric)
            .ok_or_else(|| Error::EmptyColumn("onpromotion".into()))?
            .round() as u32;
        for r in &mut table.records {
            r.onpromotion.get_or_insert(fill);
        }
    }

    if table.records.iter().any(|r| r.family.is_none()) {
        let fill = mode(table.records.iter().filter_map(|r| r.family.as_deref()))
            .ok_or_else(|| Error::EmptyColumn("family".into()))?;
        for r in &mut table.records {
            if r.family.is_none() {
                r.family = Some(fill.clone());
            }
        }
    }

    Ok(table)
}

#[derive(Hash, PartialEq, Eq)]
struct RowKey<'a> {
    date: chrono::NaiveDate,
    store: u32,
    family: Option<&'a str>,
    sales: Option<u64>,
    onpromotion: Option<u32>,
}

/// Removes rows equal to an earlier row in every field except `id`.
pub fn drop_duplicates(table: RawTable) -> RawTable {
    let RawTable { records, source } = table;
    let keep: Vec<bool> = {
        let mut seen = HashSet::with_capacity(records.len());
        records
            .iter()
            .map(|r| {
                seen.insert(RowKey {
                    date: r.date,
                    store: r.store_nbr,
                    family: r.family.as_deref(),
                    // +0.0 so that -0.0 and 0.0 compare equal
                    sales: r.sales.map(|s| (s + 0.0).to_bits()),
                    onpromotion: r.onpromotion,
                })
            })
            .collect()
    };
    let records = records
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect();
    RawTable { records, source }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RawSalesRecord;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn rec(id: u64, family: Option<&str>, sales: Option<f64>, promo: Option<u32>) -> RawSalesRecord {
        RawSalesRecord {
            id,
            date: NaiveDate::from_ymd_opt(2017, 1, 1).unwrap(),
            store_nbr: 1,
            family: family.map(str::to_string),
            sales,
            onpromotion: promo,
        }
    }

    #[test]
    fn mean_fills_numeric_gap() {
        let t = RawTable::new(vec![
            rec(0, Some("A"), Some(1.0), Some(0)),
            rec(1, Some("A"), None, Some(0)),
            rec(2, Some("A"), Some(3.0), Some(0)),
        ]);
        let t = impute_missing(t, NumericStrategy::Mean, CategoricalStrategy::Mode).unwrap();
        let s: Vec<_> = t.records.iter().map(|r| r.sales.unwrap()).collect();
        assert_eq!(s, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn median_fills_numeric_gap() {
        let t = RawTable::new(vec![
            rec(0, Some("A"), Some(1.0), Some(1)),
            rec(1, Some("A"), Some(10.0), None),
            rec(2, Some("A"), Some(2.0), Some(9)),
            rec(3, Some("A"), None, Some(2)),
        ]);
        let t = impute_missing(t, NumericStrategy::Median, CategoricalStrategy::Mode).unwrap();
        assert_eq!(t.records[3].sales, Some(2.0));
        assert_eq!(t.records[1].onpromotion, Some(2));
    }

    #[test]
    fn mode_fills_categorical_gap_with_lexicographic_ties() {
        let t = RawTable::new(vec![
            rec(0, Some("A"), Some(1.0), Some(0)),
            rec(1, Some("A"), Some(1.0), Some(0)),
            rec(2, None, Some(1.0), Some(0)),
            rec(3, Some("B"), Some(1.0), Some(0)),
        ]);
        let t = impute_missing(t, NumericStrategy::Mean, CategoricalStrategy::Mode).unwrap();
        let f: Vec<_> = t.records.iter().map(|r| r.family.clone().unwrap()).collect();
        assert_eq!(f, vec!["A", "A", "A", "B"]);

        assert_eq!(mode(["B", "A", "B", "A"]), Some("A".to_string()));
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let t = RawTable::new(vec![rec(0, Some("A"), None, Some(0)), rec(1, Some("A"), None, Some(0))]);
        let err = impute_missing(t, NumericStrategy::Mean, CategoricalStrategy::Mode).unwrap_err();
        assert!(matches!(err, Error::EmptyColumn(c) if c == "sales"));
    }

    #[test]
    fn duplicates_ignore_id_and_keep_first() {
        let t = RawTable::new(vec![
            rec(0, Some("A"), Some(1.0), Some(0)),
            rec(1, Some("B"), Some(1.0), Some(0)),
            rec(2, Some("A"), Some(1.0), Some(0)),
            rec(3, Some("A"), Some(2.0), Some(0)),
        ]);
        let d = drop_duplicates(t);
        let ids: Vec<_> = d.records.iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![0, 1, 3]);
        let again = drop_duplicates(d.clone());
        assert_eq!(again, d);
    }

    fn arb_record() -> impl Strategy<Value = RawSalesRecord> {
        (
            0u64..1000,
            prop::option::weighted(0.8, prop::sample::select(vec!["A", "B", "C"])),
            prop::option::weighted(0.8, (0u32..5).prop_map(f64::from)),
            prop::option::weighted(0.8, 0u32..3),
        )
            .prop_map(|(id, f, s, p)| rec(id, f, s, p))
    }

    proptest! {
        #[test]
        fn imputation_is_idempotent(mut rows in prop::collection::vec(arb_record(), 1..40)) {
            rows[0] = rec(0, Some("A"), Some(1.0), Some(1));
            for strategy in [NumericStrategy::Mean, NumericStrategy::Median] {
                let once = impute_missing(RawTable::new(rows.clone()), strategy, CategoricalStrategy::Mode).unwrap();
                prop_assert_eq!(once.missing_count(), 0);
                for (before, after) in rows.iter().zip(&once.records) {
                    if let Some(s) = before.sales { prop_assert_eq!(after.sales, Some(s)); }
                    if let Some(f) = &before.family { prop_assert_eq!(after.family.as_ref(), Some(f)); }
                }
                let twice = impute_missing(once.clone(), strategy, CategoricalStrategy::Mode).unwrap();
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn dedup_is_idempotent_and_shrinks(rows in prop::collection::vec(arb_record(), 0..40)) {
            let t = RawTable::new(rows);
            let once = drop_duplicates(t.clone());
            prop_assert!(once.len() <= t.len());
            prop_assert_eq!(drop_duplicates(once.clone()), once);
        }
    }
}
