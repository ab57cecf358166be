//! Flat `section.key = value` configuration files.
//!
//! ```text
//! # comments and blank lines are ignored
//! paths.corpus = data/incidents.csv
//! rules.minsupp = 0.05
//! lm.epochs = 20
//! ```

use std::path::{Path, PathBuf};

use reckon_core::clustering::Metric;
use reckon_core::langmodel::LmConfig;
use reckon_core::rules::MiningConfig;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: bad value `{value}` for `{key}`: {message}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        message: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub ontology: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub ids: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSettings {
    pub k: usize,
    pub metric: Option<Metric>,
    pub k_min: usize,
    pub k_max: usize,
    pub max_iter: usize,
    pub variance_threshold: f64,
    pub batch_size: usize,
}

impl Default for ClusteringSettings {
    fn default() -> Self {
        ClusteringSettings {
            k: 30,
            metric: None,
            k_min: 2,
            k_max: 100,
            max_iter: 100,
            variance_threshold: 0.85,
            batch_size: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub rules: MiningConfig,
    pub clustering: ClusteringSettings,
    pub lm: LmConfig,
    pub use_tags: bool,
    pub min_token_len: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths::default(),
            rules: MiningConfig::default(),
            clustering: ClusteringSettings::default(),
            lm: LmConfig::default(),
            use_tags: false,
            min_token_len: 2,
            seed: 42,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn parse<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| e.to_string())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let mut config = PipelineConfig::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut config = PipelineConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax {
                line,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            self.set(key, value).map_err(|e| match e {
                None => ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                },
                Some(message) => ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    value: value.to_string(),
                    message,
                },
            })?;
        }
        Ok(())
    }

    /// `Err(None)` for an unknown key, `Err(Some(msg))` for a bad value.
    fn set(&mut self, key: &str, v: &str) -> Result<(), Option<String>> {
        let path = || Some(PathBuf::from(v));
        let lm = &mut self.lm;
        match key {
            "seed" => self.seed = parse(v)?,
            "paths.corpus" => self.paths.corpus = path(),
            "paths.stopwords" => self.paths.stopwords = path(),
            "paths.ontology" => self.paths.ontology = path(),
            "paths.embeddings" => self.paths.embeddings = path(),
            "paths.ids" => self.paths.ids = path(),
            "paths.model" => self.paths.model = path(),
            "paths.output_dir" => self.paths.output_dir = path(),
            "mode.use_tags" => self.use_tags = parse_bool(v)?,
            "preprocess.min_token_len" => self.min_token_len = parse(v)?,
            "rules.minsupp" => self.rules.minsupp = parse(v)?,
            "rules.mincnf" => self.rules.mincnf = parse(v)?,
            "rules.idf_min" => self.rules.idf_min = parse(v)?,
            "rules.idf_max" => self.rules.idf_max = Some(parse(v)?),
            "rules.max_itemset_size" => self.rules.max_itemset_size = parse(v)?,
            "rules.require_lift_gt1" => self.rules.require_lift_gt1 = parse_bool(v)?,
            "clustering.k" => self.clustering.k = parse(v)?,
            "clustering.metric" => self.clustering.metric = Some(parse(v)?),
            "clustering.k_min" => self.clustering.k_min = parse(v)?,
            "clustering.k_max" => self.clustering.k_max = parse(v)?,
            "clustering.max_iter" => self.clustering.max_iter = parse(v)?,
            "clustering.variance_threshold" => self.clustering.variance_threshold = parse(v)?,
            "clustering.batch_size" => self.clustering.batch_size = parse(v)?,
            "lm.vocab_size" => lm.vocab_size = parse(v)?,
            "lm.embed_dim" => lm.embed_dim = parse(v)?,
            "lm.recurrent_units" => lm.recurrent_units = parse(v)?,
            "lm.recurrent_layers" => lm.recurrent_layers = parse(v)?,
            "lm.dense_units" => lm.dense_units = parse(v)?,
            "lm.dense_layers" => lm.dense_layers = parse(v)?,
            "lm.dropout_rate" => lm.dropout_rate = parse(v)?,
            "lm.seq_len" => lm.seq_len = parse(v)?,
            "lm.learning_rate" => lm.learning_rate = parse(v)?,
            "lm.beta1" => lm.beta1 = parse(v)?,
            "lm.beta2" => lm.beta2 = parse(v)?,
            "lm.epsilon" => lm.epsilon = parse(v)?,
            "lm.batch_size" => lm.batch_size = parse(v)?,
            "lm.epochs" => lm.epochs = parse(v)?,
            "lm.clip_norm" => lm.clip_norm = parse(v)?,
            _ => return Err(None),
        }
        Ok(())
    }
}
