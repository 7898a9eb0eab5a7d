use std::collections::{HashMap, HashSet};

use chrono::NaiveDate;

use super::frame::{ColumnData, Frame};
use crate::error::{Error, Result};
use crate::ingest::{HolidayEvent, Locale, Metadata, OilPrice, StoreMeta};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JoinOptions {
    /// Also flag regional holidays (matched on store state) and local ones
    /// (matched on store city).
    pub regional_holidays: bool,
    /// Add `onpromotion_x_is_holiday`.
    pub interaction_features: bool,
}

pub const INTERACTION_COLUMN: &str = "onpromotion_x_is_holiday";

/// Daily oil price lookup: forward fill, with leading gaps back-filled from
/// the first observed price.
#[derive(Debug, Clone)]
pub struct OilSeries {
    known: Vec<(NaiveDate, f64)>,
}

impl OilSeries {
    pub fn new(oil: &[OilPrice]) -> Self {
        let mut known: Vec<_> = oil
            .iter()
            .filter_map(|o| o.price.map(|p| (o.date, p)))
            .collect();
        known.sort_by_key(|&(d, _)| d);
        Self { known }
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }

    pub fn price_on(&self, date: NaiveDate) -> Option<f64> {
        let first = self.known.first()?;
        let idx = self.known.partition_point(|&(d, _)| d <= date);
        Some(if idx == 0 { first.1 } else { self.known[idx - 1].1 })
    }
}

/// Event types that close or shorten the working day.
fn is_day_off(kind: &str) -> bool {
    !matches!(kind, "Work Day" | "Event")
}

struct HolidayIndex {
    national: HashSet<NaiveDate>,
    regional: HashSet<(NaiveDate, String)>,
    local: HashSet<(NaiveDate, String)>,
}

impl HolidayIndex {
    fn new(events: &[HolidayEvent]) -> Self {
        let mut idx = HolidayIndex {
            national: HashSet::new(),
            regional: HashSet::new(),
            local: HashSet::new(),
        };
        for e in events.iter().filter(|e| !e.transferred && is_day_off(&e.kind)) {
            match e.locale {
                Locale::National => {
                    idx.national.insert(e.date);
                }
                Locale::Regional => {
                    idx.regional.insert((e.date, e.locale_name.clone()));
                }
                Locale::Local => {
                    idx.local.insert((e.date, e.locale_name.clone()));
                }
            }
        }
        idx
    }

    fn is_holiday(&self, date: NaiveDate, store: &StoreMeta, regional: bool) -> bool {
        self.national.contains(&date)
            || (regional
                && (self.regional.contains(&(date, store.state.clone()))
                    || self.local.contains(&(date, store.city.clone()))))
    }
}

/// Appends `cluster`, `store_type`, `oil_price` and `is_holiday` (plus the
/// optional interaction column). Row count is unchanged.
pub fn join_metadata(frame: &Frame, meta: &Metadata, opts: JoinOptions) -> Result<Frame> {
    let stores: HashMap<u32, &StoreMeta> = meta.stores.iter().map(|s| (s.store_nbr, s)).collect();
    let oil = OilSeries::new(&meta.oil);
    if oil.is_empty() {
        log::warn!("no oil prices available; oil_price set to 0");
    }
    let holidays = HolidayIndex::new(&meta.holidays);

    let store_col = frame.categorical("store_nbr")?;
    let dates = frame.dates("date")?;
    let n = frame.n_rows();
    let mut cluster = Vec::with_capacity(n);
    let mut store_type = Vec::with_capacity(n);
    let mut oil_price = Vec::with_capacity(n);
    let mut is_holiday = Vec::with_capacity(n);
    for i in 0..n {
        let id: u32 = store_col[i]
            .parse()
            .map_err(|_| Error::invalid(format!("store_nbr `{}` is not numeric", store_col[i])))?;
        let store = stores.get(&id).ok_or(Error::UnknownStore(id))?;
        cluster.push(store.cluster.to_string());
        store_type.push(store.store_type.clone());
        oil_price.push(oil.price_on(dates[i]).unwrap_or(0.0));
        is_holiday.push(if holidays.is_holiday(dates[i], store, opts.regional_holidays) {
            1.0
        } else {
            0.0
        });
    }

    let inter: Option<Vec<f64>> = if opts.interaction_features {
        let promo = frame.numeric("onpromotion")?;
        Some(promo.iter().zip(&is_holiday).map(|(p, h)| p * h).collect())
    } else {
        None
    };
    let mut out = frame.clone();
    out.push("cluster", ColumnData::Categorical(cluster))?;
    out.push("store_type", ColumnData::Categorical(store_type))?;
    out.push("oil_price", ColumnData::Numeric(oil_price))?;
    out.push("is_holiday", ColumnData::Numeric(is_holiday))?;
    if let Some(inter) = inter {
        out.push(INTERACTION_COLUMN, ColumnData::Numeric(inter))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SalesRecord;

    fn d(m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2016, m, day).unwrap()
    }

    fn meta() -> Metadata {
        Metadata {
            stores: vec![StoreMeta {
                store_nbr: 1,
                city: "Quito".into(),
                state: "Pichincha".into(),
                store_type: "D".into(),
                cluster: 13,
            }],
            oil: vec![
                OilPrice { date: d(1, 1), price: None },
                OilPrice { date: d(1, 2), price: Some(46.8) },
                OilPrice { date: d(1, 3), price: None },
            ],
            holidays: vec![
                HolidayEvent {
                    date: d(1, 1),
                    kind: "Holiday".into(),
                    locale: Locale::National,
                    locale_name: "Ecuador".into(),
                    description: "Primer dia del ano".into(),
                    transferred: false,
                },
                HolidayEvent {
                    date: d(1, 3),
                    kind: "Holiday".into(),
                    locale: Locale::National,
                    locale_name: "Ecuador".into(),
                    description: "moved".into(),
                    transferred: true,
                },
                HolidayEvent {
                    date: d(1, 4),
                    kind: "Holiday".into(),
                    locale: Locale::Local,
                    locale_name: "Quito".into(),
                    description: "Fundacion".into(),
                    transferred: false,
                },
            ],
        }
    }

    fn frame(store: u32) -> Frame {
        let recs: Vec<_> = (1..=4)
            .map(|day| SalesRecord {
                id: 0,
                date: d(1, day),
                store_nbr: store,
                family: "A".into(),
                sales: 1.0,
                onpromotion: 2,
            })
            .collect();
        Frame::from_records(&recs)
    }

    #[test]
    fn joins_store_oil_and_holidays() {
        let out = join_metadata(&frame(1), &meta(), JoinOptions::default()).unwrap();
        assert_eq!(out.n_rows(), 4);
        assert_eq!(out.categorical("cluster").unwrap()[0], "13");
        assert_eq!(out.categorical("store_type").unwrap()[0], "D");
        // back-filled, present, forward-filled, forward-filled past the file end
        assert_eq!(out.numeric("oil_price").unwrap(), &[46.8, 46.8, 46.8, 46.8]);
        // transferred national holiday and local holiday do not count by default
        assert_eq!(out.numeric("is_holiday").unwrap(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn regional_flag_and_interaction() {
        let opts = JoinOptions {
            regional_holidays: true,
            interaction_features: true,
        };
        let out = join_metadata(&frame(1), &meta(), opts).unwrap();
        assert_eq!(out.numeric("is_holiday").unwrap(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(out.numeric(INTERACTION_COLUMN).unwrap(), &[2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn unknown_store_is_an_error() {
        let err = join_metadata(&frame(7), &meta(), JoinOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownStore(7)));
    }
}
