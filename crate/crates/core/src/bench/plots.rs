use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::metrics::{residual_series, AxisValue, ResidualAxis, ResidualSeries};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Paths written by [`emit_residual_plots`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub time_csv: PathBuf,
    pub time_svg: PathBuf,
    pub pred_csv: PathBuf,
    pub pred_svg: PathBuf,
}

fn axis_number(v: &AxisValue<f64>) -> f64 {
    match v {
        AxisValue::Date(d) => d.num_days_from_ce_f64(),
        AxisValue::Value(x) => *x,
    }
}

trait DaysF64 {
    fn num_days_from_ce_f64(&self) -> f64;
}

impl DaysF64 for NaiveDate {
    fn num_days_from_ce_f64(&self) -> f64 {
        f64::from(chrono::Datelike::num_days_from_ce(self))
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

/// Scatter of residuals against the series axis with a dashed zero line.
pub fn scatter_svg(series: &ResidualSeries<f64>, title: &str, x_label: &str) -> String {
    let (x0, x1) = span(series.points.iter().map(|(a, _)| axis_number(a)));
    let (y0, y1) = span(series.points.iter().map(|&(_, r)| r).chain([0.0]));
    let sx = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        WIDTH / 2.0
    );
    let (l, r, b, t) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{b}" x2="{l}" y2="{t}" stroke="black"/>"#);
    let z = sy(0.0);
    let _ = writeln!(
        s,
        r#"<line x1="{l}" y1="{z:.2}" x2="{r}" y2="{z:.2}" stroke="grey" stroke-dasharray="4 3"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">residual</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (label, y) in [(y0, b), (y1, t)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="10">{label:.1}</text>"#,
            l - 4.0
        );
    }
    for (a, res) in &series.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue" fill-opacity="0.6"/>"#,
            sx(axis_number(a)),
            sy(*res)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `residuals_time.{csv,svg}` and `residuals_pred.{csv,svg}` into
/// `dir`.
pub fn emit_residual_plots(y: &[f64], y_hat: &[f64], dates: &[NaiveDate], dir: &Path) -> Result<PlotFiles> {
    let time = residual_series(y, y_hat, ResidualAxis::Time(dates))?;
    let pred = residual_series(y, y_hat, ResidualAxis::Predicted)?;
    let files = PlotFiles {
        time_csv: dir.join("residuals_time.csv"),
        time_svg: dir.join("residuals_time.svg"),
        pred_csv: dir.join("residuals_pred.csv"),
        pred_svg: dir.join("residuals_pred.svg"),
    };
    time.save_csv(&files.time_csv)?;
    pred.save_csv(&files.pred_csv)?;
    let write = |path: &Path, body: String| std::fs::write(path, body).map_err(|e| Error::io(path, e));
    write(&files.time_svg, scatter_svg(&time, "Residuals versus time", "date"))?;
    write(&files.pred_svg, scatter_svg(&pred, "Residuals versus predicted values", "predicted"))?;
    Ok(files)
}
