//! Run configuration shared by all subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use forge_core::bench::{ModelEntry, SynthSpec};
use forge_core::features::PipelineConfig;
use forge_core::models::{HyperParams, ModelKind};
use forge_core::tuning::{CvScheme, ParamDistribution, ParamGrid, Scoring, SearchSpace};
use forge_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Locations of the four input tables plus optional row filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub sales: PathBuf,
    pub stores: PathBuf,
    pub oil: PathBuf,
    pub holidays: PathBuf,
    /// Keep only these stores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_filter: Option<Vec<u32>>,
    /// Keep only rows on or after this date (`YYYY-MM-DD`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_date: Option<String>,
}

impl DataSource {
    /// `train.csv`, `stores.csv`, `oil.csv` and `holidays_events.csv` in `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        DataSource {
            sales: dir.join("train.csv"),
            stores: dir.join("stores.csv"),
            oil: dir.join("oil.csv"),
            holidays: dir.join("holidays_events.csv"),
            store_filter: None,
            start_date: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    Grid,
    #[default]
    Random,
}

impl std::str::FromStr for SearchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(SearchKind::Grid),
            "random" => Ok(SearchKind::Random),
            _ => Err(Error::InvalidArgument(format!("unknown search kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpec {
    pub kind: SearchKind,
    pub iterations: usize,
    /// Overrides the seed derived from the global seed.
    pub seed: Option<u64>,
    pub folds: usize,
    pub shuffle: bool,
    pub scoring: Scoring,
    /// `None` uses the default space of the model kind.
    pub space: Option<SearchSpace>,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            kind: SearchKind::Random,
            iterations: 60,
            seed: None,
            folds: 5,
            shuffle: true,
            scoring: Scoring::NegMse,
            space: None,
        }
    }
}

/// Default search space for a model kind.
pub fn default_space(kind: ModelKind) -> Result<SearchSpace> {
    match kind {
        ModelKind::Rf => Ok(SearchSpace::forest_reference()),
        ModelKind::Gb => Ok(SearchSpace::boosting_default(false)),
        ModelKind::Xgb => Ok(SearchSpace::boosting_default(true)),
        ModelKind::Tree => Ok(SearchSpace::tree_default()),
        ModelKind::Lr => Err(Error::InvalidArgument("linear regression has no hyperparameters to tune".into())),
    }
}

/// Seeds fanned out from the global seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Seeds {
    /// Train/test split: `seed`.
    pub split: u64,
    /// Model fitting: `seed + 1`.
    pub model: u64,
    /// Cross-validation folds: `seed + 2`.
    pub cv: u64,
    /// Search sampling and trial seeds: `seed + 3`.
    pub search: u64,
    /// Synthetic data: `seed + 4`.
    pub synth: u64,
}

impl Seeds {
    pub fn from_global(seed: u64) -> Self {
        Seeds {
            split: seed,
            model: seed.wrapping_add(1),
            cv: seed.wrapping_add(2),
            search: seed.wrapping_add(3),
            synth: seed.wrapping_add(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: Option<DataSource>,
    pub synth: Option<SynthSpec>,
    pub pipeline: PipelineConfig,
    /// Learner for `train`, `tune` and `forecast`.
    pub model: ModelKind,
    /// Hyperparameters for `model`; defaults depend on the kind.
    pub params: Option<HyperParams>,
    /// Learners for `compare`; empty means every kind at its defaults.
    pub models: Vec<ModelEntry>,
    /// Also tune the tree-based learners in `compare`.
    pub compare_tuned: bool,
    pub search: SearchSpec,
    pub horizon: usize,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            data: None,
            synth: None,
            pipeline: PipelineConfig::default(),
            model: ModelKind::Rf,
            params: None,
            models: Vec::new(),
            compare_tuned: false,
            search: SearchSpec::default(),
            horizon: 15,
            out: PathBuf::from("out"),
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn seeds(&self) -> Seeds {
        Seeds::from_global(self.seed)
    }

    /// Copies the derived seeds into the nested configs and checks that
    /// exactly one data source is set.
    pub fn resolve(mut self) -> Result<Self> {
        let seeds = self.seeds();
        self.pipeline.seed = seeds.split;
        if let Some(s) = self.synth.as_mut() {
            s.seed = seeds.synth;
        }
        match (&self.data, &self.synth) {
            (Some(_), Some(_)) => Err(Error::InvalidArgument("set either data or synth, not both".into())),
            (None, None) => Err(Error::InvalidArgument(
                "no data source: pass --data DIR or set data/synth in the config".into(),
            )),
            _ => Ok(self),
        }
    }

    pub fn params(&self) -> HyperParams {
        self.params.unwrap_or_else(|| HyperParams::default_for(self.model))
    }

    pub fn cv_scheme(&self) -> CvScheme {
        CvScheme {
            k: self.search.folds,
            shuffle: self.search.shuffle,
            seed: self.seeds().cv,
        }
    }

    pub fn search_seed(&self) -> u64 {
        self.search.seed.unwrap_or(self.seeds().search)
    }

    pub fn distribution(&self, kind: ModelKind, base: HyperParams) -> Result<ParamDistribution> {
        Ok(ParamDistribution {
            base,
            space: match &self.search.space {
                Some(s) => s.clone(),
                None => default_space(kind)?,
            },
            n_iterations: self.search.iterations,
            seed: self.search_seed(),
        })
    }

    pub fn grid(&self, kind: ModelKind, base: HyperParams) -> Result<ParamGrid> {
        match &self.search.space {
            Some(s) => s.to_grid(base),
            None => default_space(kind)?.to_grid(base),
        }
    }

    /// SHA-256 of the configuration without `out` and `jobs`, which do not
    /// affect results.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.jobs = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .fold(String::with_capacity(64), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_fan_out() {
        let s = Seeds::from_global(10);
        assert_eq!((s.split, s.model, s.cv, s.search, s.synth), (10, 11, 12, 13, 14));
    }

    #[test]
    fn resolve_needs_one_source() {
        assert!(RunConfig::default().resolve().is_err());
        let both = RunConfig {
            data: Some(DataSource::in_dir(Path::new("d"))),
            synth: Some(SynthSpec::default()),
            ..Default::default()
        };
        assert!(both.resolve().is_err());
        let c = RunConfig { seed: 5, synth: Some(SynthSpec::default()), ..Default::default() }
            .resolve()
            .unwrap();
        assert_eq!(c.pipeline.seed, 5);
        assert_eq!(c.synth.unwrap().seed, 9);
    }

    #[test]
    fn fingerprint_ignores_output_dir() {
        let a = RunConfig { synth: Some(SynthSpec::default()), ..Default::default() };
        let b = RunConfig { out: "elsewhere".into(), jobs: Some(3), ..a.clone() };
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = RunConfig { seed: 2, ..a.clone() };
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn json_keys() {
        let c: RunConfig = serde_json::from_str(
            r#"{"seed": 3, "model": "xgb", "horizon": 7,
                "search": {"kind": "grid", "iterations": 5, "seed": 9,
                           "space": {"max_depth": [2, 3]}},
                "synth": {"n_days": 30}}"#,
        )
        .unwrap();
        assert_eq!(c.model, ModelKind::Xgb);
        assert_eq!(c.search.kind, SearchKind::Grid);
        assert_eq!(c.search_seed(), 9);
        assert_eq!(c.grid(c.model, c.params()).unwrap().len().unwrap(), 2);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }
}
