//! Pipeline configuration loaded from TOML.
//!
//! ```toml
//! workers = 4
//! mock_judge = "fixtures/mock.json"
//!
//! [judge]
//! base_url = "http://127.0.0.1:8000/v1"
//! model = "Qwen2.5-7B-Instruct"
//!
//! [reward]
//! preset = "qwen"
//!
//! [retrieval]
//! contexts = 3
//!
//! [align]
//! min_ratio = 0.7
//! max_unresolved_rate = 0.2
//!
//! [paths]
//! input = "responses.jsonl"
//! corpus = "corpus.jsonl"
//! output = "out"
//! ```
//!
//! Relative paths in the file are resolved against the file's directory.
//! A `[trainer]` table is accepted and carried along untouched.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::DEFAULT_MIN_RATIO;
use crate::judge::{JudgeEndpoint, RetryPolicy};
use crate::reward::RewardConfig;

pub const DEFAULT_WORKERS: usize = 4;
pub const DEFAULT_MAX_UNRESOLVED_RATE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown reward preset {0:?} (expected qwen or llama)")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{what} path {path} does not exist")]
    MissingPath { what: &'static str, path: PathBuf },
    #[error("no {0} path configured")]
    Unset(&'static str),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSettings {
    pub preset: Option<String>,
    /// Inline parameters, used when no preset is named.
    pub config: Option<RewardConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSettings {
    pub contexts: usize,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        RetrievalSettings {
            contexts: crate::judge::DEFAULT_CONTEXTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignSettings {
    pub min_ratio: f64,
    /// Largest tolerated fraction of statements left without an anchor.
    pub max_unresolved_rate: f64,
}

impl Default for AlignSettings {
    fn default() -> Self {
        AlignSettings {
            min_ratio: DEFAULT_MIN_RATIO,
            max_unresolved_rate: DEFAULT_MAX_UNRESOLVED_RATE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub token_offsets: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub workers: usize,
    pub mock_judge: Option<PathBuf>,
    pub judge: JudgeEndpoint,
    pub reward: RewardSettings,
    pub retrieval: RetrievalSettings,
    pub align: AlignSettings,
    pub paths: PathSettings,
    /// Trainer-side settings (KL coefficient, GAE lambda, ...), not interpreted here.
    pub trainer: toml::Table,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            workers: DEFAULT_WORKERS,
            mock_judge: None,
            judge: JudgeEndpoint::default(),
            reward: RewardSettings::default(),
            retrieval: RetrievalSettings::default(),
            align: AlignSettings::default(),
            paths: PathSettings::default(),
            trainer: toml::Table::new(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub token_offsets: Option<PathBuf>,
    pub preset: Option<String>,
    pub mock_judge: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Loads a config file, resolving its relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p.as_mut() {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        };
        fix(&mut self.mock_judge);
        fix(&mut self.paths.input);
        fix(&mut self.paths.output);
        fix(&mut self.paths.corpus);
        fix(&mut self.paths.token_offsets);
    }

    pub fn apply(&mut self, o: Overrides) {
        let set = |slot: &mut Option<PathBuf>, v: Option<PathBuf>| {
            if v.is_some() {
                *slot = v;
            }
        };
        set(&mut self.paths.input, o.input);
        set(&mut self.paths.output, o.output);
        set(&mut self.paths.corpus, o.corpus);
        set(&mut self.paths.token_offsets, o.token_offsets);
        set(&mut self.mock_judge, o.mock_judge);
        if let Some(preset) = o.preset {
            self.reward.preset = Some(preset);
            self.reward.config = None;
        }
        if let Some(workers) = o.workers {
            self.workers = workers;
        }
    }

    /// The reward parameters in effect: a named preset, else the inline
    /// table, else the qwen preset.
    pub fn reward_config(&self) -> Result<RewardConfig, ConfigError> {
        let cfg = match (&self.reward.preset, &self.reward.config) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "reward.preset and reward.config are mutually exclusive".to_string(),
                ))
            }
            (Some(name), None) => {
                RewardConfig::preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?
            }
            (None, Some(inline)) => inline.clone(),
            (None, None) => RewardConfig::qwen(),
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.judge.max_retries,
            backoff: std::time::Duration::from_millis(self.judge.retry_backoff_ms),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".to_string()));
        }
        if self.retrieval.contexts == 0 {
            return Err(ConfigError::Invalid("retrieval.contexts must be at least 1".to_string()));
        }
        let ratio_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !ratio_ok(self.align.min_ratio) {
            return Err(ConfigError::Invalid(format!(
                "align.min_ratio must lie in [0, 1], got {}",
                self.align.min_ratio
            )));
        }
        if !ratio_ok(self.align.max_unresolved_rate) {
            return Err(ConfigError::Invalid(format!(
                "align.max_unresolved_rate must lie in [0, 1], got {}",
                self.align.max_unresolved_rate
            )));
        }
        self.judge.validate().map_err(ConfigError::Invalid)?;
        self.reward_config()?;
        Ok(())
    }
}

/// Returns `path` if set and existing on disk.
pub fn existing(path: &Option<PathBuf>, what: &'static str) -> Result<PathBuf, ConfigError> {
    let path = path.clone().ok_or(ConfigError::Unset(what))?;
    if path.exists() {
        Ok(path)
    } else {
        Err(ConfigError::MissingPath { what, path })
    }
}
