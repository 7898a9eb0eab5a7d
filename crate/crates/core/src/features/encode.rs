use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::frame::{ColumnData, Frame};
use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;

pub type TargetVector = Vec<f64>;

/// Fit-time category labels per encoded column, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub columns: Vec<(String, Vec<String>)>,
}

impl EncodingMap {
    pub fn labels(&self, column: &str) -> Option<&[String]> {
        self.columns
            .iter()
            .find(|(c, _)| c == column)
            .map(|(_, l)| l.as_slice())
    }

    /// Indicator vector for `label`; all zeros when the label was not seen.
    pub fn encode(&self, column: &str, label: &str) -> Option<Vec<f64>> {
        self.labels(column)
            .map(|labels| labels.iter().map(|l| f64::from(u8::from(l == label))).collect())
    }

    /// Inverse of [`EncodingMap::encode`] for fit-time labels.
    pub fn decode(&self, column: &str, indicators: &[f64]) -> Option<&str> {
        let labels = self.labels(column)?;
        if indicators.len() != labels.len() {
            return None;
        }
        let mut hot = indicators.iter().enumerate().filter(|(_, &v)| v == 1.0);
        match (hot.next(), hot.next()) {
            (Some((i, _)), None) => Some(labels[i].as_str()),
            _ => None,
        }
    }
}

pub fn one_hot_name(column: &str, label: &str) -> String {
    format!("{column}={label}")
}

fn first_seen(values: &[String]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    values
        .iter()
        .filter(|v| seen.insert(v.as_str()))
        .cloned()
        .collect()
}

fn encode_with(frame: &Frame, map: &EncodingMap) -> Result<DesignMatrix<f64>> {
    let n = frame.n_rows();
    let mut names = Vec::new();
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for col in frame.columns() {
        match (&col.data, map.labels(&col.name)) {
            (ColumnData::Numeric(v), None) => {
                names.push(col.name.clone());
                blocks.push(v.clone());
            }
            (ColumnData::Categorical(v), Some(labels)) => {
                let index: HashMap<&str, usize> = labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i))
                    .collect();
                let start = blocks.len();
                for l in labels {
                    names.push(one_hot_name(&col.name, l));
                    blocks.push(vec![0.0; n]);
                }
                for (row, label) in v.iter().enumerate() {
                    if let Some(&k) = index.get(label.as_str()) {
                        blocks[start + k][row] = 1.0;
                    }
                }
            }
            (ColumnData::Categorical(_), None) => {
                return Err(Error::invalid(format!(
                    "categorical column `{}` was not listed for encoding",
                    col.name
                )))
            }
            (ColumnData::Date(_), _) => {
                return Err(Error::invalid(format!(
                    "date column `{}` must be removed before encoding",
                    col.name
                )))
            }
            (ColumnData::Numeric(_), Some(_)) => {
                return Err(Error::invalid(format!("column `{}` is not categorical", col.name)))
            }
        }
    }
    for (c, _) in &map.columns {
        frame.get(c)?;
    }
    let mut values = Vec::with_capacity(n * blocks.len());
    for i in 0..n {
        values.extend(blocks.iter().map(|b| b[i]));
    }
    DesignMatrix::new(values, n, names)
}

/// Expands each listed categorical column into one indicator column per
/// distinct label (all labels kept). Numeric columns pass through in place.
pub fn one_hot_encode(
    frame: &Frame,
    categorical_columns: &[&str],
) -> Result<(DesignMatrix<f64>, EncodingMap)> {
    if frame.n_rows() == 0 {
        return Err(Error::Empty("cannot encode an empty table"));
    }
    let mut map = EncodingMap::default();
    for col in frame.columns() {
        if categorical_columns.contains(&col.name.as_str()) {
            match &col.data {
                ColumnData::Categorical(v) => map.columns.push((col.name.clone(), first_seen(v))),
                _ => {
                    return Err(Error::invalid(format!(
                        "column `{}` is not categorical",
                        col.name
                    )))
                }
            }
        }
    }
    for c in categorical_columns {
        frame.get(c)?;
    }
    let x = encode_with(frame, &map)?;
    Ok((x, map))
}

/// Encodes new rows with a fitted map. Unseen labels become all-zero rows.
pub fn one_hot_transform(frame: &Frame, map: &EncodingMap) -> Result<DesignMatrix<f64>> {
    encode_with(frame, map)
}

/// Removes the numeric target column from the table.
pub fn split_xy(frame: &Frame, target_column: &str) -> Result<(Frame, TargetVector)> {
    let mut x = frame.clone();
    match x.remove(target_column)? {
        ColumnData::Numeric(y) => Ok((x, y)),
        _ => Err(Error::invalid(format!(
            "target column `{target_column}` is not numeric"
        ))),
    }
}
