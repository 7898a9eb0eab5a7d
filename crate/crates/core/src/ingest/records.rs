use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fully populated sales row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalesRecord {
    pub id: u64,
    pub date: NaiveDate,
    pub store_nbr: u32,
    pub family: String,
    pub sales: f64,
    pub onpromotion: u32,
}

/// A sales row as read from disk, before imputation. `date` and
/// `store_nbr` are required; the rest may be missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSalesRecord {
    pub id: u64,
    pub date: NaiveDate,
    pub store_nbr: u32,
    pub family: Option<String>,
    pub sales: Option<f64>,
    pub onpromotion: Option<u32>,
}

impl RawSalesRecord {
    pub fn is_complete(&self) -> bool {
        self.family.is_some() && self.sales.is_some() && self.onpromotion.is_some()
    }
}

impl From<SalesRecord> for RawSalesRecord {
    fn from(r: SalesRecord) -> Self {
        RawSalesRecord {
            id: r.id,
            date: r.date,
            store_nbr: r.store_nbr,
            family: Some(r.family),
            sales: Some(r.sales),
            onpromotion: Some(r.onpromotion),
        }
    }
}

/// Ordered sales rows plus where they came from. Equality ignores the
/// source path.
#[derive(Debug, Clone, Default)]
pub struct RawTable {
    pub records: Vec<RawSalesRecord>,
    pub source: Option<PathBuf>,
}

impl PartialEq for RawTable {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl RawTable {
    pub fn new(records: Vec<RawSalesRecord>) -> Self {
        Self {
            records,
            source: None,
        }
    }

    pub fn from_clean(records: Vec<SalesRecord>) -> Self {
        Self::new(records.into_iter().map(RawSalesRecord::from).collect())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.records
            .iter()
            .map(|r| {
                usize::from(r.family.is_none())
                    + usize::from(r.sales.is_none())
                    + usize::from(r.onpromotion.is_none())
            })
            .sum()
    }

    /// Converts to complete records; fails on the first missing cell.
    pub fn into_records(self) -> Result<Vec<SalesRecord>> {
        self.records
            .into_iter()
            .enumerate()
            .map(|(index, r)| {
                Ok(SalesRecord {
                    id: r.id,
                    date: r.date,
                    store_nbr: r.store_nbr,
                    family: r.family.ok_or(Error::Incomplete {
                        index,
                        column: "family",
                    })?,
                    sales: r.sales.ok_or(Error::Incomplete {
                        index,
                        column: "sales",
                    })?,
                    onpromotion: r.onpromotion.ok_or(Error::Incomplete {
                        index,
                        column: "onpromotion",
                    })?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub store_nbr: u32,
    pub city: String,
    pub state: String,
    pub store_type: String,
    pub cluster: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OilPrice {
    pub date: NaiveDate,
    pub price: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Locale {
    National,
    Regional,
    Local,
}

impl Locale {
    pub fn as_str(self) -> &'static str {
        match self {
            Locale::National => "National",
            Locale::Regional => "Regional",
            Locale::Local => "Local",
        }
    }
}

impl std::str::FromStr for Locale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "National" => Ok(Locale::National),
            "Regional" => Ok(Locale::Regional),
            "Local" => Ok(Locale::Local),
            other => Err(format!("unknown locale `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolidayEvent {
    pub date: NaiveDate,
    pub kind: String,
    pub locale: Locale,
    pub locale_name: String,
    pub description: String,
    pub transferred: bool,
}

/// The side tables joined onto sales rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub stores: Vec<StoreMeta>,
    pub oil: Vec<OilPrice>,
    pub holidays: Vec<HolidayEvent>,
}
