use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::SplitIndices;
use crate::matrix::DesignMatrix;
use crate::metrics::{evaluate, format_metric, EvaluationReport, REPORT_LABELS};
use crate::models::{fit_model, HyperParams, ModelKind, TrainedModel};

/// One model to fit in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    pub kind: ModelKind,
    pub params: HyperParams,
}

impl ModelEntry {
    pub fn new(name: impl Into<String>, kind: ModelKind, params: HyperParams) -> Self {
        ModelEntry {
            name: name.into(),
            kind,
            params,
        }
    }

    /// Every learner at its default settings, named by its display name.
    pub fn defaults() -> Vec<ModelEntry> {
        [ModelKind::Rf, ModelKind::Lr, ModelKind::Gb, ModelKind::Xgb]
            .into_iter()
            .map(|k| ModelEntry::new(k.display_name(), k, HyperParams::default_for(k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub kind: ModelKind,
    pub params: HyperParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvaluationReport<f64>>,
    /// Set when fitting or evaluating failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset: String,
    pub fingerprint: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_features: usize,
    /// Ordered by descending test R-squared; failed rows last.
    pub rows: Vec<ComparisonRow>,
}

/// SHA-256 over the config text, the seed and both index lists.
pub fn fingerprint(config: &str, seed: u64, split: &SplitIndices) -> String {
    let mut idx = Sha256::new();
    for &i in &split.test {
        idx.update((i as u64).to_le_bytes());
    }
    idx.update(b"|");
    for &i in &split.train {
        idx.update((i as u64).to_le_bytes());
    }
    let index_hash = idx.finalize();
    let mut h = Sha256::new();
    h.update(config.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(index_hash);
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Fits every entry on the training rows with seed `seed` and evaluates it
/// on the test rows. A failing entry becomes an annotated row. Returns
/// the fitted models in entry order alongside the report.
pub fn compare_models(
    x: &DesignMatrix<f64>,
    y: &[f64],
    split: &SplitIndices,
    entries: &[ModelEntry],
    seed: u64,
    dataset: &str,
    config: &str,
) -> Result<(ComparisonReport, Vec<Option<TrainedModel<f64>>>)> {
    if entries.is_empty() {
        return Err(Error::invalid("comparison needs at least one model"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.n_rows(), y.len())));
    }
    let x_train = x.select_rows(&split.train);
    let y_train: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
    let x_test = x.select_rows(&split.test);
    let y_test: Vec<f64> = split.test.iter().map(|&i| y[i]).collect();
    let p = x.n_cols();

    let mut rows = Vec::with_capacity(entries.len());
    let mut models = Vec::with_capacity(entries.len());
    for e in entries {
        let outcome = fit_model(e.kind, &x_train, &y_train, &e.params, seed).and_then(|m| {
            let pred = m.predict(&x_test)?;
            Ok((evaluate(&y_test, &pred, p)?, m))
        });
        let mut row = ComparisonRow {
            name: e.name.clone(),
            kind: e.kind,
            params: e.params,
            report: None,
            error: None,
        };
        match outcome {
            Ok((report, m)) => {
                log::info!("{}: test R-squared {:.4}", e.name, report.r_squared);
                row.report = Some(report);
                models.push(Some(m));
            }
            Err(err) => {
                log::warn!("{} failed: {err}", e.name);
                row.error = Some(err.to_string());
                models.push(None);
            }
        }
        rows.push(row);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        let key = |i: usize| rows[i].report.map(|r| r.r_squared);
        match (key(a), key(b)) {
            (Some(ra), Some(rb)) => rb.total_cmp(&ra),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
    });
    let rows = order.iter().map(|&i| rows[i].clone()).collect();

    Ok((
        ComparisonReport {
            dataset: dataset.to_string(),
            fingerprint: fingerprint(config, seed, split),
            seed,
            n_train: split.train.len(),
            n_test: split.test.len(),
            n_features: p,
            rows,
        },
        models,
    ))
}

impl ComparisonReport {
    /// Metrics as rows, models as columns.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Metric |");
        for r in &self.rows {
            let _ = write!(out, " {} |", r.name);
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.rows.len()));
        out.push('\n');
        for (m, label) in REPORT_LABELS.iter().enumerate() {
            let _ = write!(out, "| {label} |");
            for r in &self.rows {
                let cell = r.report.map_or("failed".to_string(), |rep| format_metric(rep.values()[m]));
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(out, "\n{}: {}", r.name, r.error.as_deref().unwrap_or_default());
        }
        let _ = writeln!(
            out,
            "\n{}: {} train rows, {} test rows, {} features, seed {}, fingerprint {}",
            self.dataset, self.n_train, self.n_test, self.n_features, self.seed, self.fingerprint
        );
        out
    }

    /// One line per model with full-precision values.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "model",
            "kind",
            "r_squared",
            "adjusted_r_squared",
            "mse",
            "rmse",
            "mae",
            "rmsle",
            "error",
        ])?;
        for r in &self.rows {
            let mut rec = vec![r.name.clone(), r.kind.as_str().to_string()];
            match r.report {
                Some(rep) => rec.extend(rep.values().iter().map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), 6)),
            }
            rec.push(r.error.clone().unwrap_or_default());
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv writer>", e))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.md`, `report.json` and `report.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let write = |name: &str, body: &[u8]| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(path, e))
        };
        write("report.md", self.to_markdown().as_bytes())?;
        write("report.json", (self.to_json()? + "\n").as_bytes())?;
        let mut csv = Vec::new();
        self.write_csv(&mut csv)?;
        write("report.csv", &csv)
    }
}
