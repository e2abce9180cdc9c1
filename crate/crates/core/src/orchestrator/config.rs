use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::backend::BackendSpec;
use crate::chrf::ChrfConfig;
use crate::error::{Error, Result};
use crate::sampler::{LengthBin, DEFAULT_GRANULARITY, DEFAULT_UPPER_BOUNDS};
use crate::sweep::{deserialize_nmo_list, enumerate_grid, BpeConfig, Direction};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_ITERATIONS: usize = 10_000;

/// Language code -> file path.
pub type LanguageFiles = BTreeMap<String, PathBuf>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    pub train: LanguageFiles,
    pub valid: LanguageFiles,
    /// Test set name -> per-language files. Every test set is scored.
    pub test: BTreeMap<String, LanguageFiles>,
}

fn default_one() -> u32 {
    1
}
fn default_workers() -> usize {
    1
}
fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}
fn default_bins() -> Vec<usize> {
    DEFAULT_UPPER_BOUNDS.to_vec()
}
fn default_granularity() -> u64 {
    DEFAULT_GRANULARITY
}

/// Experiment description, loaded from JSON (`"schema": 1`).
///
/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub corpus: CorpusPaths,
    pub directions: Vec<Direction>,
    /// Language whose token counts drive stratified sampling. Defaults to
    /// the source language of the first direction.
    #[serde(default)]
    pub sample_by: Option<String>,
    pub sizes: Vec<u64>,
    #[serde(deserialize_with = "deserialize_nmo_list")]
    pub nmo_set: Vec<u32>,
    pub backend: BackendSpec,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_one")]
    pub repetitions: u32,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_bins")]
    pub bins: Vec<usize>,
    #[serde(default = "default_granularity")]
    pub granularity: u64,
    #[serde(default)]
    pub chrf: Option<ChrfConfig>,
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_owned(),
        message: message.into(),
    }
}

/// Extracts the offending field name from a serde error message.
fn field_of(message: &str) -> String {
    for marker in ["missing field `", "unknown field `", "duplicate field `"] {
        if let Some(rest) = message.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_owned();
            }
        }
    }
    "<document>".to_owned()
}

impl ExperimentConfig {
    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingPath(path.to_owned()),
            _ => e.into(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| {
            let message = e.to_string();
            config_err(&field_of(&message), message)
        })?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus.train.values_mut().for_each(fix);
        self.corpus.valid.values_mut().for_each(fix);
        self.corpus
            .test
            .values_mut()
            .flat_map(|m| m.values_mut())
            .for_each(fix);
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(config_err("schema", format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        if self.directions.is_empty() {
            return Err(config_err("directions", "at least one direction is required"));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(config_err("sizes", "need at least one positive size"));
        }
        let mut uniq = BTreeSet::new();
        if let Some(dup) = self.sizes.iter().find(|s| !uniq.insert(**s)) {
            return Err(config_err("sizes", format!("duplicate size {dup}")));
        }
        enumerate_grid(&self.nmo_set).map_err(|e| config_err("nmo_set", e.to_string()))?;
        if self.repetitions == 0 {
            return Err(config_err("repetitions", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(config_err("workers", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(config_err("iterations", "must be at least 1"));
        }
        if self.granularity == 0 {
            return Err(config_err("granularity", "must be at least 1"));
        }
        LengthBin::from_upper_bounds(&self.bins).map_err(|e| config_err("bins", e.to_string()))?;
        self.backend.validate().map_err(|e| config_err("backend", e.to_string()))?;

        let langs = self.languages();
        let sample_lang = self.sample_language();
        if !langs.contains(&sample_lang) {
            return Err(config_err("sample_by", format!("{sample_lang:?} is not a language of any direction")));
        }
        let check = |field: String, files: &LanguageFiles| -> Result<()> {
            for lang in &langs {
                let path = files
                    .get(lang)
                    .ok_or_else(|| config_err(&field, format!("no file for language {lang:?}")))?;
                if !path.exists() {
                    return Err(config_err(&field, Error::MissingPath(path.clone()).to_string()));
                }
            }
            Ok(())
        };
        check("corpus.train".into(), &self.corpus.train)?;
        check("corpus.valid".into(), &self.corpus.valid)?;
        if self.corpus.test.is_empty() {
            return Err(config_err("corpus.test", "at least one test set is required"));
        }
        for (name, files) in &self.corpus.test {
            if name.is_empty() || name.contains(['/', '\\', '.', '\t']) {
                return Err(config_err("corpus.test", format!("invalid test set name {name:?}")));
            }
            check(format!("corpus.test.{name}"), files)?;
        }
        Ok(())
    }

    /// All languages named by the directions, sorted.
    pub fn languages(&self) -> BTreeSet<String> {
        self.directions
            .iter()
            .flat_map(|d| [d.src.clone(), d.tgt.clone()])
            .collect()
    }

    pub fn sample_language(&self) -> String {
        self.sample_by
            .clone()
            .unwrap_or_else(|| self.directions[0].src.clone())
    }

    pub fn chrf_config(&self) -> ChrfConfig {
        self.chrf.unwrap_or_default()
    }

    pub fn length_bins(&self) -> Vec<LengthBin> {
        LengthBin::from_upper_bounds(&self.bins).expect("validated")
    }

    pub fn grid(&self) -> Vec<BpeConfig> {
        enumerate_grid(&self.nmo_set).expect("validated")
    }

    /// Every system to train: direction x size x repetition x configuration.
    pub fn plan(&self) -> Vec<PlannedRun> {
        let grid = self.grid();
        let mut runs = Vec::with_capacity(
            self.directions.len() * self.sizes.len() * self.repetitions as usize * grid.len(),
        );
        for &size in &self.sizes {
            for rep in 0..self.repetitions {
                for direction in &self.directions {
                    for &config in &grid {
                        runs.push(PlannedRun {
                            direction: direction.clone(),
                            size,
                            rep,
                            seed: crate::rng::derive_seed(self.seed, rep),
                            config,
                        });
                    }
                }
            }
        }
        runs
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedRun {
    pub direction: Direction,
    pub size: u64,
    pub rep: u32,
    pub seed: u64,
    pub config: BpeConfig,
}
