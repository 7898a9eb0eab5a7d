//! The six subcommands. Each takes a resolved [`RunConfig`], writes its
//! artifacts under `config.out` and returns a summary of what it did.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use forge_core::bench::{
    cluster_lr_analysis, compare_models, emit_residual_plots, forecast_recursive, generate_synthetic_sales,
    save_forecast_csv, ComparisonReport, ForecastRow, ModelEntry, SynthData, SynthSpec,
};
use forge_core::features::{prepare, Prepared, SplitIndices};
use forge_core::ingest::{
    load_holidays, load_oil_prices, load_sales_csv, load_store_metadata, write_holidays, write_oil_prices,
    write_sales_csv, write_store_metadata, Metadata, RawTable,
};
use forge_core::metrics::{evaluate, EvaluationReport, Metric};
use forge_core::models::{feature_importances, fit_model, permutation_importance, ModelInner, TrainedModel};
use forge_core::tuning::{grid_search, randomized_search, SearchResult};
use forge_core::{Error, Result};
use serde::Serialize;

use crate::config::{RunConfig, SearchKind};

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| io_err(path, e))
}

fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    seed: u64,
    seeds: crate::config::Seeds,
    fingerprint: String,
    config: RunConfig,
}

fn write_run_record(cfg: &RunConfig, command: &str) -> Result<()> {
    let mut config = cfg.clone();
    config.out = PathBuf::new();
    config.jobs = None;
    write_json(
        &cfg.out.join("run.json"),
        &RunRecord {
            command,
            seed: cfg.seed,
            seeds: cfg.seeds(),
            fingerprint: cfg.fingerprint(),
            config,
        },
    )
}

/// Raw tables for a run, loaded from disk or generated.
pub struct Dataset {
    pub name: String,
    pub raw: RawTable,
    pub meta: Metadata,
    pub synth: Option<SynthData>,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if let Some(spec) = &cfg.synth {
        let data = generate_synthetic_sales(spec)?;
        return Ok(Dataset {
            name: format!("synthetic ({} rows)", data.sales.len()),
            raw: RawTable::from_clean(data.sales.clone()),
            meta: data.meta.clone(),
            synth: Some(data),
        });
    }
    let src = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no data source configured".into()))?;
    let mut raw = load_sales_csv(&src.sales)?;
    if let Some(stores) = &src.store_filter {
        raw.records.retain(|r| stores.contains(&r.store_nbr));
    }
    if let Some(start) = &src.start_date {
        let start = NaiveDate::parse_from_str(start, "%Y-%m-%d")
            .map_err(|_| Error::InvalidArgument(format!("bad start_date {start:?}, expected YYYY-MM-DD")))?;
        raw.records.retain(|r| r.date >= start);
    }
    let meta = Metadata {
        stores: load_store_metadata(&src.stores)?,
        oil: load_oil_prices(&src.oil)?,
        holidays: load_holidays(&src.holidays)?,
    };
    Ok(Dataset {
        name: src.sales.display().to_string(),
        raw,
        meta,
        synth: None,
    })
}

fn prepared(cfg: &RunConfig) -> Result<(Dataset, Prepared)> {
    let data = load_dataset(cfg)?;
    let p = prepare(data.raw.clone(), &data.meta, &cfg.pipeline)?;
    log::info!("prepared {} rows x {} features", p.x.n_rows(), p.x.n_cols());
    Ok((data, p))
}

#[derive(Debug, Clone, Serialize)]
pub struct PrepareOutcome {
    pub summary: forge_core::features::PrepSummary,
    pub split: SplitIndices,
    pub fingerprint: String,
}

/// Writes `X.csv`, `y.csv`, `split.json`, `pipeline.json` and
/// `summary.json`.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<PrepareOutcome> {
    ensure_dir(&cfg.out)?;
    let (_, p) = prepared(cfg)?;
    let split = p.split()?;
    p.x.save_csv(&cfg.out.join("X.csv"))?;
    let y_text: String = std::iter::once("sales".to_string())
        .chain(p.y.iter().map(|v| v.to_string()))
        .collect::<Vec<_>>()
        .join("\n");
    write_text(&cfg.out.join("y.csv"), &(y_text + "\n"))?;
    write_json(&cfg.out.join("split.json"), &split)?;
    write_json(&cfg.out.join("pipeline.json"), &p.pipeline)?;
    let outcome = PrepareOutcome {
        summary: p.summary.clone(),
        split,
        fingerprint: cfg.fingerprint(),
    };
    write_json(&cfg.out.join("summary.json"), &outcome.summary)?;
    write_run_record(cfg, "prepare")?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
struct ReportFile<'a> {
    model: &'a str,
    fingerprint: String,
    seed: u64,
    report: EvaluationReport<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel<f64>,
    pub report: EvaluationReport<f64>,
}

fn split_rows(p: &Prepared, split: &SplitIndices) -> (forge_core::FeatureMatrix, Vec<f64>, forge_core::FeatureMatrix, Vec<f64>) {
    (
        p.x.select_rows(&split.train),
        p.select_y(&split.train),
        p.x.select_rows(&split.test),
        p.select_y(&split.test),
    )
}

/// Writes importances as `feature,importance`; impurity-based for tree
/// models, permutation-based (MSE, on the given rows) for linear ones.
fn write_importances(
    path: &Path,
    model: &TrainedModel<f64>,
    x: &forge_core::FeatureMatrix,
    y: &[f64],
    seed: u64,
) -> Result<()> {
    let values = match model.inner {
        ModelInner::Linear(_) => permutation_importance(model, x, y, Metric::Mse, 3, seed)?,
        _ => feature_importances(model)?,
    };
    let mut text = String::from("feature,importance\n");
    for (name, v) in model.feature_names.iter().zip(values) {
        text.push_str(&format!("\"{}\",{v}\n", name.replace('"', "\"\"")));
    }
    write_text(path, &text)
}

fn finish_model(
    cfg: &RunConfig,
    p: &Prepared,
    split: &SplitIndices,
    model: &TrainedModel<f64>,
    name: &str,
) -> Result<EvaluationReport<f64>> {
    let (_, _, x_test, y_test) = split_rows(p, split);
    let pred = model.predict(&x_test)?;
    let report = evaluate(&y_test, &pred, x_test.n_cols())?;
    model.save(cfg.out.join("model.json"))?;
    write_json(
        &cfg.out.join("report.json"),
        &ReportFile {
            model: name,
            fingerprint: cfg.fingerprint(),
            seed: cfg.seed,
            report,
        },
    )?;
    write_text(&cfg.out.join("report.md"), &report.to_markdown(name))?;
    let test_dates: Vec<_> = split.test.iter().map(|&i| p.dates[i]).collect();
    emit_residual_plots(&y_test, &pred, &test_dates, &cfg.out)?;
    write_importances(&cfg.out.join("importance.csv"), model, &x_test, &y_test, cfg.seeds().model)?;
    Ok(report)
}

/// Fits `config.model` on the training split and evaluates it on the test
/// split. Writes `model.json`, `report.{json,md}`, residual plots and
/// `importance.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    ensure_dir(&cfg.out)?;
    let (_, p) = prepared(cfg)?;
    let split = p.split()?;
    let (x_train, y_train, _, _) = split_rows(&p, &split);
    let model = fit_model(cfg.model, &x_train, &y_train, &cfg.params(), cfg.seeds().model)?;
    let report = finish_model(cfg, &p, &split, &model, cfg.model.display_name())?;
    write_run_record(cfg, "train")?;
    Ok(TrainOutcome { model, report })
}

fn run_search(
    cfg: &RunConfig,
    kind: forge_core::models::ModelKind,
    base: forge_core::models::HyperParams,
    x: &forge_core::FeatureMatrix,
    y: &[f64],
) -> Result<SearchResult<f64>> {
    let scheme = cfg.cv_scheme();
    match cfg.search.kind {
        SearchKind::Grid => grid_search(kind, &cfg.grid(kind, base)?, x, y, &scheme, cfg.search.scoring, cfg.search_seed()),
        SearchKind::Random => randomized_search(kind, &cfg.distribution(kind, base)?, x, y, &scheme, cfg.search.scoring),
    }
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub search: SearchResult<f64>,
    pub model: TrainedModel<f64>,
    pub report: EvaluationReport<f64>,
}

/// Cross-validated search on the training split, then a refit of the best
/// point. Writes `trials.csv`, `search.json` and everything `train` writes.
pub fn cmd_tune(cfg: &RunConfig) -> Result<TuneOutcome> {
    ensure_dir(&cfg.out)?;
    let (_, p) = prepared(cfg)?;
    let split = p.split()?;
    let (x_train, y_train, _, _) = split_rows(&p, &split);
    let search = run_search(cfg, cfg.model, cfg.params(), &x_train, &y_train)?;
    search.save_trials_csv(cfg.out.join("trials.csv"))?;
    write_json(&cfg.out.join("search.json"), &search)?;
    let model = fit_model(cfg.model, &x_train, &y_train, &search.best_params, cfg.seeds().model)?;
    let name = format!("{} (Tuned)", cfg.model.display_name());
    let report = finish_model(cfg, &p, &split, &model, &name)?;
    write_run_record(cfg, "tune")?;
    Ok(TuneOutcome { search, model, report })
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_")
}

/// Fits every configured learner on one split and writes `report.{md,json,csv}`,
/// `models/<name>.json`, residual plots of the best row and
/// `cluster_lr.json` (per-cluster linear fits on the training rows).
pub fn cmd_compare(cfg: &RunConfig) -> Result<ComparisonReport> {
    ensure_dir(&cfg.out)?;
    let (data, p) = prepared(cfg)?;
    let split = p.split()?;
    let (x_train, y_train, x_test, y_test) = split_rows(&p, &split);

    let mut entries = if cfg.models.is_empty() {
        ModelEntry::defaults()
    } else {
        cfg.models.clone()
    };
    if cfg.compare_tuned {
        let mut all = Vec::new();
        for e in entries {
            if e.kind == forge_core::models::ModelKind::Lr {
                all.push(e);
                continue;
            }
            let search = run_search(cfg, e.kind, e.params, &x_train, &y_train)?;
            all.push(ModelEntry::new(format!("{} (Default)", e.name), e.kind, e.params));
            all.push(ModelEntry::new(format!("{} (Tuned)", e.name), e.kind, search.best_params));
        }
        entries = all;
    }

    let (report, models) = compare_models(
        &p.x,
        &p.y,
        &split,
        &entries,
        cfg.seeds().model,
        &data.name,
        &cfg.fingerprint(),
    )?;
    report.save(&cfg.out)?;
    let model_dir = cfg.out.join("models");
    ensure_dir(&model_dir)?;
    for (e, m) in entries.iter().zip(&models) {
        if let Some(m) = m {
            m.save(model_dir.join(format!("{}.json", slug(&e.name))))?;
        }
    }
    if let Some(best) = report.rows.first().filter(|r| r.report.is_some()) {
        let idx = entries.iter().position(|e| e.name == best.name).expect("row comes from an entry");
        if let Some(m) = &models[idx] {
            let pred = m.predict(&x_test)?;
            let dates: Vec<_> = split.test.iter().map(|&i| p.dates[i]).collect();
            emit_residual_plots(&y_test, &pred, &dates, &cfg.out)?;
        }
    }
    let train_clusters: Vec<u32> = split.train.iter().map(|&i| p.clusters[i]).collect();
    let clusters = cluster_lr_analysis(&x_train, &y_train, &train_clusters)?;
    write_json(&cfg.out.join("cluster_lr.json"), &clusters)?;
    write_run_record(cfg, "compare")?;
    Ok(report)
}

/// Fits `config.model` on every prepared row and predicts `config.horizon`
/// days past the end of the data, feeding predictions back as lags.
/// Future promotions are taken as zero. Writes `forecast.csv` and
/// `model.json`.
pub fn cmd_forecast(cfg: &RunConfig) -> Result<Vec<ForecastRow>> {
    ensure_dir(&cfg.out)?;
    let (data, p) = prepared(cfg)?;
    let model = fit_model(cfg.model, &p.x, &p.y, &cfg.params(), cfg.seeds().model)?;
    let rows = forecast_recursive(&model, &p.records, &data.meta, &p.pipeline, cfg.horizon, None)?;
    save_forecast_csv(&rows, &cfg.out.join("forecast.csv"))?;
    model.save(cfg.out.join("model.json"))?;
    write_run_record(cfg, "forecast")?;
    Ok(rows)
}

/// Generates a synthetic dataset in the four-file input layout plus
/// `components.csv` with the generating terms of every row.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthData> {
    ensure_dir(&cfg.out)?;
    let mut spec = cfg.synth.clone().unwrap_or_else(SynthSpec::default);
    spec.seed = cfg.seeds().synth;
    let data = generate_synthetic_sales(&spec)?;
    let out = &cfg.out;
    write_sales_csv(&RawTable::from_clean(data.sales.clone()), &out.join("train.csv"))?;
    write_store_metadata(&data.meta.stores, &out.join("stores.csv"))?;
    write_oil_prices(&data.meta.oil, &out.join("oil.csv"))?;
    write_holidays(&data.meta.holidays, &out.join("holidays_events.csv"))?;
    let mut text = String::from("id,base,weekly,annual,promo,noise\n");
    for (r, c) in data.sales.iter().zip(&data.components) {
        text.push_str(&format!("{},{},{},{},{},{}\n", r.id, c.base, c.weekly, c.annual, c.promo, c.noise));
    }
    write_text(&out.join("components.csv"), &text)?;
    let mut record = cfg.clone();
    record.synth = Some(spec);
    write_run_record(&record, "synth")?;
    Ok(data)
}
