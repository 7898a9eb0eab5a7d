//! Regression metrics and residual series.
//!
//! Sums use Neumaier compensation so that large evaluation sets stay
//! within round-off of a naive double-precision loop.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

fn check_pair<T>(y: &[T], y_hat: &[T]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::Shape(format!(
            "{} actuals vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Empty("metric of zero samples"));
    }
    Ok(())
}

fn mean_of<T: Scalar>(values: impl Iterator<Item = T>, n: usize) -> T {
    let mut acc = CompensatedSum::new();
    values.for_each(|v| acc.add(v));
    acc.value() / <T as Scalar>::from_usize(n)
}

pub fn mse<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check_pair(y, y_hat)?;
    Ok(mean_of(
        y.iter().zip(y_hat).map(|(&a, &p)| (a - p) * (a - p)),
        y.len(),
    ))
}

pub fn rmse<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    mse(y, y_hat).map(T::sqrt)
}

pub fn mae<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check_pair(y, y_hat)?;
    Ok(mean_of(y.iter().zip(y_hat).map(|(&a, &p)| (a - p).abs()), y.len()))
}

/// `1 - SS_res / SS_tot`. Undefined for constant `y`.
pub fn r_squared<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check_pair(y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::Undefined("R-squared needs at least two samples"));
    }
    let mean = mean_of(y.iter().copied(), y.len());
    let mut ss_tot = CompensatedSum::new();
    let mut ss_res = CompensatedSum::new();
    for (&a, &p) in y.iter().zip(y_hat) {
        ss_tot.add((a - mean) * (a - mean));
        ss_res.add((a - p) * (a - p));
    }
    let ss_tot = ss_tot.value();
    if ss_tot <= T::zero() {
        return Err(Error::Undefined("R-squared of a constant target"));
    }
    Ok(T::one() - ss_res.value() / ss_tot)
}

/// `1 - (1 - r2)(n - 1)/(n - p - 1)`.
pub fn adjusted_r_squared<T: Scalar>(r2: T, n: usize, p: usize) -> Result<T> {
    if n <= p + 1 {
        return Err(Error::Undefined(
            "adjusted R-squared needs more samples than predictors plus one",
        ));
    }
    let n1 = <T as Scalar>::from_usize(n - 1);
    let dof = <T as Scalar>::from_usize(n - p - 1);
    Ok(T::one() - (T::one() - r2) * n1 / dof)
}

/// Root mean squared log error with `log1p`; negative predictions are
/// clamped to zero here and nowhere else.
pub fn rmsle<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check_pair(y, y_hat)?;
    if y.iter().any(|&a| a < T::zero()) {
        return Err(Error::invalid("RMSLE requires non-negative actuals"));
    }
    let m = mean_of(
        y.iter().zip(y_hat).map(|(&a, &p)| {
            let d = a.ln_1p() - p.max(T::zero()).ln_1p();
            d * d
        }),
        y.len(),
    );
    Ok(m.sqrt())
}

/// Named metric, used for scoring and permutation importance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Rmse,
    Mae,
    R2,
    Rmsle,
}

impl Metric {
    pub fn compute<T: Scalar>(self, y: &[T], y_hat: &[T]) -> Result<T> {
        match self {
            Metric::Mse => mse(y, y_hat),
            Metric::Rmse => rmse(y, y_hat),
            Metric::Mae => mae(y, y_hat),
            Metric::R2 => r_squared(y, y_hat),
            Metric::Rmsle => rmsle(y, y_hat),
        }
    }

    pub fn greater_is_better(self) -> bool {
        matches!(self, Metric::R2)
    }

    /// Metric expressed as a loss (lower is better).
    pub fn loss<T: Scalar>(self, y: &[T], y_hat: &[T]) -> Result<T> {
        let v = self.compute(y, y_hat)?;
        Ok(if self.greater_is_better() { -v } else { v })
    }
}

/// Row labels used in rendered report tables.
pub const REPORT_LABELS: [&str; 6] = [
    "R-squared",
    "Adjusted R-squared",
    "Mean Squared Error (MSE)",
    "Root Mean Squared Error",
    "Mean Absolute Error (MAE)",
    "RMSLE",
];

/// The full metric bundle for one model on one evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(from = "ReportDoc<T>", bound = "T: Scalar")]
pub struct EvaluationReport<T> {
    pub r_squared: T,
    pub adjusted_r_squared: T,
    pub mse: T,
    pub mae: T,
    pub rmsle: T,
    pub n: usize,
    pub p: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ReportDoc<T> {
    r_squared: T,
    adjusted_r_squared: T,
    mse: T,
    rmse: T,
    mae: T,
    rmsle: T,
    n: usize,
    p: usize,
}

impl<T: Scalar> From<ReportDoc<T>> for EvaluationReport<T> {
    fn from(d: ReportDoc<T>) -> Self {
        EvaluationReport {
            r_squared: d.r_squared,
            adjusted_r_squared: d.adjusted_r_squared,
            mse: d.mse,
            mae: d.mae,
            rmsle: d.rmsle,
            n: d.n,
            p: d.p,
        }
    }
}

impl<T: Scalar> Serialize for EvaluationReport<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportDoc {
            r_squared: self.r_squared,
            adjusted_r_squared: self.adjusted_r_squared,
            mse: self.mse,
            rmse: self.rmse(),
            mae: self.mae,
            rmsle: self.rmsle,
            n: self.n,
            p: self.p,
        }
        .serialize(s)
    }
}

impl<T: Scalar> EvaluationReport<T> {
    pub fn rmse(&self) -> T {
        self.mse.sqrt()
    }

    /// Values in [`REPORT_LABELS`] order.
    pub fn values(&self) -> [T; 6] {
        [
            self.r_squared,
            self.adjusted_r_squared,
            self.mse,
            self.rmse(),
            self.mae,
            self.rmsle,
        ]
    }

    /// `(label, value)` rows for a metric-per-row table.
    pub fn markdown_rows(&self) -> Vec<(&'static str, String)> {
        REPORT_LABELS
            .iter()
            .zip(self.values())
            .map(|(l, v)| (*l, format_metric(v.to_f64_lossy())))
            .collect()
    }

    /// Two-column markdown table (`Metric | value`).
    pub fn to_markdown(&self, model_name: &str) -> String {
        let mut out = format!("| Metric | {model_name} |\n|---|---|\n");
        for (label, value) in self.markdown_rows() {
            let _ = writeln!(out, "| {label} | {value} |");
        }
        out
    }
}

/// Fixed formatting for report cells: 4 decimals, or 2 for large values.
pub fn format_metric(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

/// All six metrics for predictions from a model with `p` predictors.
pub fn evaluate<T: Scalar>(y: &[T], y_hat: &[T], p: usize) -> Result<EvaluationReport<T>> {
    let r2 = r_squared(y, y_hat)?;
    Ok(EvaluationReport {
        r_squared: r2,
        adjusted_r_squared: adjusted_r_squared(r2, y.len(), p)?,
        mse: mse(y, y_hat)?,
        mae: mae(y, y_hat)?,
        rmsle: rmsle(y, y_hat)?,
        n: y.len(),
        p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue<T> {
    Date(NaiveDate),
    Value(T),
}

impl<T: Scalar> AxisValue<T> {
    fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (AxisValue::Date(a), AxisValue::Date(b)) => a.cmp(b),
            (AxisValue::Value(a), AxisValue::Value(b)) => {
                a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
            }
            (AxisValue::Date(_), AxisValue::Value(_)) => std::cmp::Ordering::Less,
            (AxisValue::Value(_), AxisValue::Date(_)) => std::cmp::Ordering::Greater,
        }
    }

    pub fn label(&self) -> String {
        match self {
            AxisValue::Date(d) => d.format("%Y-%m-%d").to_string(),
            AxisValue::Value(v) => v.to_string(),
        }
    }
}

/// Which quantity goes on the horizontal axis.
#[derive(Debug, Clone, Copy)]
pub enum ResidualAxis<'a> {
    Time(&'a [NaiveDate]),
    Predicted,
}

/// `(axis, actual - predicted)` pairs sorted by axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ResidualSeries<T> {
    pub points: Vec<(AxisValue<T>, T)>,
}

impl<T: Scalar> ResidualSeries<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["axis", "residual"])?;
        for (axis, r) in &self.points {
            out.write_record([axis.label(), r.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<csv writer>", e))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

pub fn residual_series<T: Scalar>(
    y: &[T],
    y_hat: &[T],
    axis: ResidualAxis<'_>,
) -> Result<ResidualSeries<T>> {
    if y.len() != y_hat.len() {
        return Err(Error::Shape("actuals and predictions differ in length".into()));
    }
    let mut points: Vec<(AxisValue<T>, T)> = match axis {
        ResidualAxis::Time(dates) => {
            if dates.len() != y.len() {
                return Err(Error::Shape("dates differ in length from actuals".into()));
            }
            dates
                .iter()
                .zip(y.iter().zip(y_hat))
                .map(|(&d, (&a, &p))| (AxisValue::Date(d), a - p))
                .collect()
        }
        ResidualAxis::Predicted => y
            .iter()
            .zip(y_hat)
            .map(|(&a, &p)| (AxisValue::Value(p), a - p))
            .collect(),
    };
    points.sort_by(|a, b| a.0.cmp_key(&b.0));
    Ok(ResidualSeries { points })
}
