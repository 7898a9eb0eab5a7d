//! Dense row-major design matrix with named columns.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix<T> {
    values: Vec<T>,
    n_rows: usize,
    n_cols: usize,
    column_names: Vec<String>,
}

impl<T: Scalar> DesignMatrix<T> {
    /// Builds a matrix from row-major values. Rejects duplicate column
    /// names and non-finite entries.
    pub fn new(values: Vec<T>, n_rows: usize, column_names: Vec<String>) -> Result<Self> {
        let n_cols = column_names.len();
        if values.len() != n_rows * n_cols {
            return Err(Error::Shape(format!(
                "{} values for a {}x{} matrix",
                values.len(),
                n_rows,
                n_cols
            )));
        }
        let mut seen = HashSet::with_capacity(n_cols);
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate column name `{name}`")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column `{}`",
                pos / n_cols.max(1),
                column_names[pos % n_cols.max(1)]
            )));
        }
        Ok(Self {
            values,
            n_rows,
            n_cols,
            column_names,
        })
    }

    /// Matrix with generated column names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let names = (0..n_cols).map(|j| format!("x{j}")).collect();
        Self::new(rows.concat(), rows.len(), names)
    }

    /// Matrix from column vectors with generated names.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::Shape("columns of unequal length".into()));
        }
        let mut values = Vec::with_capacity(n_rows * columns.len());
        for i in 0..n_rows {
            values.extend(columns.iter().map(|c| c[i]));
        }
        let names = (0..columns.len()).map(|j| format!("x{j}")).collect();
        Self::new(values, n_rows, names)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.n_cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.values[row * self.n_cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn column(&self, col: usize) -> Vec<T> {
        (0..self.n_rows).map(|i| self.get(i, col)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.n_cols).map(|j| self.column(j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self {
            values,
            n_rows: rows.len(),
            n_cols: self.n_cols,
            column_names: self.column_names.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            values.extend(cols.iter().map(|&j| row[j]));
        }
        Self {
            values,
            n_rows: self.n_rows,
            n_cols: cols.len(),
            column_names: cols.iter().map(|&j| self.column_names[j].clone()).collect(),
        }
    }

    /// Converts every entry to another precision.
    pub fn cast<U: Scalar>(&self) -> DesignMatrix<U> {
        DesignMatrix {
            values: self
                .values
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            column_names: self.column_names.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(&self.column_names)?;
        for i in 0..self.n_rows {
            out.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        out.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_names_and_nan() {
        let names = vec!["a".to_string(), "a".to_string()];
        assert!(DesignMatrix::new(vec![1.0, 2.0], 1, names).is_err());
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(DesignMatrix::new(vec![1.0, f64::NAN], 1, names).is_err());
    }

    #[test]
    fn select_and_csv() {
        let m = DesignMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.5]]).unwrap();
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[5.0, 6.5]);
        assert_eq!(s.column(1), vec![6.5, 2.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x0,x1\n5,6.5\n1,2\n");
    }

    #[test]
    fn from_columns_matches_from_rows() {
        let a = DesignMatrix::from_columns(&[vec![1.0_f32, 3.0], vec![2.0, 4.0]]).unwrap();
        let b = DesignMatrix::from_rows(&[vec![1.0_f32, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a, b);
    }
}
