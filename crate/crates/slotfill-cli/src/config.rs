//! Experiment configuration file: one TOML document describing paths,
//! model and training settings, noise suites, and the named method variants
//! to compare. Command-line flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slotfill_core::tagger::HyperConfig;
use slotfill_core::training::OptimizerConfig;
use slotfill_core::{
    Error, FeatureAugmentConfig, LossType, NoiseSpec, Result, TextAugmentConfig, TrainConfig,
};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub homophone_lexicon: Option<PathBuf>,
    pub synonym_lexicon: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

/// A named delta over the base `[train]` table; unset fields inherit.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: String,
    pub epochs: Option<usize>,
    pub alpha: Option<f64>,
    pub loss_type: Option<LossType>,
    pub text_augment: Option<TextAugmentConfig>,
    pub feature_augment: Option<FeatureAugmentConfig>,
    pub optimizer: Option<OptimizerConfig>,
    pub seed: Option<u64>,
    pub shuffle: Option<bool>,
}

impl MethodConfig {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.loss_type {
            cfg.loss_type = v;
        }
        if let Some(v) = &self.text_augment {
            cfg.text_augment = Some(v.clone());
        }
        if let Some(v) = &self.feature_augment {
            cfg.feature_augment = Some(v.clone());
        }
        if let Some(v) = self.optimizer {
            cfg.optimizer = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.shuffle {
            cfg.shuffle = v;
        }
        cfg
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub suites: Vec<NoiseSpec>,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
    /// Vocabulary frequency cutoff.
    #[serde(default = "default_min_count")]
    pub min_count: usize,
}

fn default_min_count() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            paths: PathsConfig::default(),
            hyper: HyperConfig::default(),
            train: TrainConfig::default(),
            suites: Vec::new(),
            methods: Vec::new(),
            min_count: default_min_count(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks at load time: method names unique, referenced
    /// files present. Training-combination rules are checked later, after
    /// flag overrides have been applied.
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        for pair in names.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::Config(format!("duplicate method name {:?}", pair[0])));
            }
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be >= 1".into()));
        }
        let files = [
            &self.paths.train,
            &self.paths.dev,
            &self.paths.test,
            &self.paths.homophone_lexicon,
            &self.paths.synonym_lexicon,
        ];
        for path in files.into_iter().flatten() {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "configured path does not exist: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn method(&self, name: &str) -> Result<&MethodConfig> {
        self.methods.iter().find(|m| m.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
            Error::Config(format!(
                "method {name:?} not found in config (known: {})",
                if known.is_empty() { "none".to_string() } else { known.join(", ") }
            ))
        })
    }
}
