use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use forge_cli::{exit, exit_code, DataSource, RunConfig, SearchKind};
use forge_core::features::SplitMode;
use forge_core::models::ModelKind;

/// Retail sales forecasting: data preparation, model training, tuning,
/// comparison and recursive forecasting.
#[derive(Parser)]
#[command(name = "forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean the inputs and write the design matrix.
    Prepare(Common),
    /// Fit one model and evaluate it on the test split.
    Train(Common),
    /// Cross-validated hyperparameter search.
    Tune(Common),
    /// Fit several models on one split and tabulate their metrics.
    Compare(Common),
    /// Predict the days after the end of the data.
    Forecast(Common),
    /// Write a synthetic dataset in the input layout.
    Synth(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lr,
    Tree,
    Rf,
    Gb,
    Xgb,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Random,
    Chrono,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    Grid,
    Random,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding train.csv, stores.csv, oil.csv and holidays_events.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Global seed; split, model, CV, search and synthetic seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    split: Option<SplitArg>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Forecast horizon in days.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_enum)]
    search: Option<SearchArg>,
    /// Randomized search iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Also tune the tree-based models when comparing.
    #[arg(long)]
    tuned: bool,
}

fn build_config(c: &Common, synth_command: bool) -> forge_core::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &c.data {
        cfg.data = Some(DataSource::in_dir(dir));
        cfg.synth = None;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(j) = c.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(s) = c.split {
        cfg.pipeline.split_mode = match s {
            SplitArg::Random => SplitMode::Random,
            SplitArg::Chrono => SplitMode::Chronological,
        };
    }
    if let Some(f) = c.test_fraction {
        cfg.pipeline.test_fraction = f;
    }
    if let Some(m) = c.model {
        let kind = match m {
            ModelArg::Lr => ModelKind::Lr,
            ModelArg::Tree => ModelKind::Tree,
            ModelArg::Rf => ModelKind::Rf,
            ModelArg::Gb => ModelKind::Gb,
            ModelArg::Xgb => ModelKind::Xgb,
        };
        if kind != cfg.model {
            cfg.params = None;
        }
        cfg.model = kind;
    }
    if let Some(h) = c.horizon {
        cfg.horizon = h;
    }
    if let Some(s) = c.search {
        cfg.search.kind = match s {
            SearchArg::Grid => SearchKind::Grid,
            SearchArg::Random => SearchKind::Random,
        };
    }
    if let Some(n) = c.iterations {
        cfg.search.iterations = n;
    }
    if c.tuned {
        cfg.compare_tuned = true;
    }
    if synth_command {
        Ok(cfg)
    } else {
        cfg.resolve()
    }
}

fn run(cli: Cli) -> forge_core::Result<()> {
    let (common, synth) = match &cli.command {
        Command::Synth(c) => (c, true),
        Command::Prepare(c)
        | Command::Train(c)
        | Command::Tune(c)
        | Command::Compare(c)
        | Command::Forecast(c) => (c, false),
    };
    let cfg = build_config(common, synth)?;
    if let Some(j) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let out = cfg.out.display().to_string();
    match cli.command {
        Command::Prepare(_) => {
            let o = forge_cli::cmd_prepare(&cfg)?;
            println!(
                "prepared {} rows, {} features ({} imputed cells, {} duplicates, {} rows without lag history) -> {out}",
                o.summary.rows_out,
                o.summary.n_features,
                o.summary.cells_imputed,
                o.summary.duplicates_removed,
                o.summary.lag_rows_dropped
            );
        }
        Command::Train(_) => {
            let o = forge_cli::cmd_train(&cfg)?;
            print!("{}", o.report.to_markdown(o.model.kind.display_name()));
        }
        Command::Tune(_) => {
            let o = forge_cli::cmd_tune(&cfg)?;
            println!(
                "best of {} trials: mean CV score {:.6} with {}",
                o.search.trials.len(),
                o.search.best_score,
                serde_json::to_string(&o.search.best_params)?
            );
            print!("{}", o.report.to_markdown("test"));
        }
        Command::Compare(_) => {
            let r = forge_cli::cmd_compare(&cfg)?;
            print!("{}", r.to_markdown());
        }
        Command::Forecast(_) => {
            let rows = forge_cli::cmd_forecast(&cfg)?;
            println!("{} forecast rows -> {out}/forecast.csv", rows.len());
        }
        Command::Synth(_) => {
            let d = forge_cli::cmd_synth(&cfg)?;
            println!("{} synthetic sales rows -> {out}", d.sales.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
