use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::ingest::SalesRecord;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
    Date(Vec<NaiveDate>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Date(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
            ColumnData::Date(v) => ColumnData::Date(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Small columnar table used between cleaning and encoding.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Frame {
    pub fn new() -> Self {
        Self::default()
    }

    /// Columns `date, store_nbr, family, onpromotion, sales`.
    pub fn from_records(records: &[SalesRecord]) -> Self {
        let mut f = Frame::new();
        let cols = [
            ("date", ColumnData::Date(records.iter().map(|r| r.date).collect())),
            (
                "store_nbr",
                ColumnData::Categorical(records.iter().map(|r| r.store_nbr.to_string()).collect()),
            ),
            (
                "family",
                ColumnData::Categorical(records.iter().map(|r| r.family.clone()).collect()),
            ),
            (
                "onpromotion",
                ColumnData::Numeric(records.iter().map(|r| f64::from(r.onpromotion)).collect()),
            ),
            ("sales", ColumnData::Numeric(records.iter().map(|r| r.sales).collect())),
        ];
        f.n_rows = records.len();
        for (name, data) in cols {
            f.columns.push(Column {
                name: name.into(),
                data,
            });
        }
        f
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn push(&mut self, name: impl Into<String>, data: ColumnData) -> Result<()> {
        let name = name.into();
        if self.columns.iter().any(|c| c.name == name) {
            return Err(Error::invalid(format!("column `{name}` already exists")));
        }
        if !self.columns.is_empty() && data.len() != self.n_rows {
            return Err(Error::Shape(format!(
                "column `{name}` has {} rows, frame has {}",
                data.len(),
                self.n_rows
            )));
        }
        self.n_rows = data.len();
        self.columns.push(Column { name, data });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ColumnData> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| &c.data)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.get(name)? {
            ColumnData::Numeric(v) => Ok(v),
            _ => Err(Error::invalid(format!("column `{name}` is not numeric"))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<&[String]> {
        match self.get(name)? {
            ColumnData::Categorical(v) => Ok(v),
            _ => Err(Error::invalid(format!("column `{name}` is not categorical"))),
        }
    }

    pub fn dates(&self, name: &str) -> Result<&[NaiveDate]> {
        match self.get(name)? {
            ColumnData::Date(v) => Ok(v),
            _ => Err(Error::invalid(format!("column `{name}` is not a date column"))),
        }
    }

    pub fn remove(&mut self, name: &str) -> Result<ColumnData> {
        let pos = self
            .columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))?;
        Ok(self.columns.remove(pos).data)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Frame {
        Frame {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            n_rows: rows.len(),
        }
    }
}
