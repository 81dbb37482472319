//! Toolkit configuration file (TOML).
//!
//! When a file is given, every section except `[paths]` and every key in it
//! must be present; unknown keys are rejected. `print-config` emits the
//! defaults as a complete starting point.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::ThemeLexicon;
use crate::noise::NoiseConfig;
use crate::preprocess::{CleanPolicy, Glossary, Identity, Translator};
use crate::rouge::MultiReference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adapter {
    #[default]
    Identity,
    Glossary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateConfig {
    pub adapter: Adapter,
    pub target_lang: String,
    /// Word substitutions used by the `glossary` adapter.
    pub glossary: BTreeMap<String, String>,
}

impl Default for TranslateConfig {
    fn default() -> Self {
        TranslateConfig {
            adapter: Adapter::Identity,
            target_lang: "en".to_string(),
            glossary: BTreeMap::new(),
        }
    }
}

impl TranslateConfig {
    pub fn translator(&self) -> Box<dyn Translator> {
        match self.adapter {
            Adapter::Identity => Box::new(Identity),
            Adapter::Glossary => Box::new(Glossary::new(self.glossary.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RougeConfig {
    pub ns: BTreeSet<usize>,
    pub multi_reference: MultiReference,
}

impl Default for RougeConfig {
    fn default() -> Self {
        RougeConfig {
            ns: [1, 2].into(),
            multi_reference: MultiReference::Pool,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    /// Maximum turns per hypertext segment.
    pub segment_size: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { segment_size: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summaries: Option<PathBuf>,
}

impl PathsConfig {
    pub fn is_empty(&self) -> bool {
        self == &PathsConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolkitConfig {
    pub clean: CleanPolicy,
    pub translate: TranslateConfig,
    pub noise: NoiseConfig,
    pub rouge: RougeConfig,
    pub graph: GraphConfig,
    pub lexicon: ThemeLexicon,
    #[serde(default, skip_serializing_if = "PathsConfig::is_empty")]
    pub paths: PathsConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

const HEADER: &str = "\
# Toolkit configuration. When a config file is supplied every key below is
# required; unknown keys are rejected. [paths] is optional and is overridden
# by command-line flags.
#
# The following fine-tuning settings are commonly paired with the generated
# denoising data. This toolkit does not train models and does not read them:
#   label_smoothing_factor      = 0.1
#   per_device_train_batch_size = 1
#   per_device_eval_batch_size  = 2
#   gradient_accumulation_steps = 1
#   max_source_length           = 3000
#   max_target_length           = 360
#   learning_rate               = 2e-5
#   warmup_steps                = 50
#   max_steps                   = 10
#   save_steps                  = 5
#   eval_steps                  = 5

";

impl ToolkitConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: ToolkitConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.clean.validate().map_err(|e| invalid(&e))?;
        self.noise.validate().map_err(|e| invalid(&e))?;
        if self.rouge.ns.is_empty() || self.rouge.ns.contains(&0) {
            return Err(ConfigError::Invalid("rouge.ns must list positive n-gram orders".into()));
        }
        if self.graph.segment_size == 0 {
            return Err(ConfigError::Invalid("graph.segment_size must be at least 1".into()));
        }
        if self.translate.target_lang.trim().is_empty() {
            return Err(ConfigError::Invalid("translate.target_lang must not be empty".into()));
        }
        Ok(())
    }

    /// Defaults as a commented TOML document.
    pub fn default_toml() -> String {
        let body = toml::to_string(&ToolkitConfig::default()).expect("default config serializes");
        format!("{HEADER}{body}")
    }
}
