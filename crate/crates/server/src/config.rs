use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use storygraph_core::pipeline::PipelineConfig;
use storygraph_core::story::FormatMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid value for {key}: {message}")]
    Value { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ProviderSpec {
    Builtin,
    Remote(String),
}

impl FromStr for ProviderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "builtin" {
            return Ok(Self::Builtin);
        }
        let url = s.strip_prefix("remote:").unwrap_or(s);
        if url.starts_with("http://") || url.starts_with("https://") {
            Ok(Self::Remote(url.to_owned()))
        } else {
            Err(format!("expected `builtin` or `remote:<http url>`, got {s:?}"))
        }
    }
}

impl From<ProviderSpec> for String {
    fn from(p: ProviderSpec) -> Self {
        match p {
            ProviderSpec::Builtin => "builtin".to_owned(),
            ProviderSpec::Remote(url) => format!("remote:{url}"),
        }
    }
}

impl TryFrom<String> for ProviderSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub similarity_threshold: f64,
    pub top_n: usize,
    pub max_depth: usize,
    pub embedding_provider: ProviderSpec,
    pub strict_format: bool,
    pub data_dir: PathBuf,
    pub port: u16,
    /// Journal entries between snapshots.
    pub snapshot_every: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.4,
            top_n: 5,
            max_depth: 2,
            embedding_provider: ProviderSpec::Builtin,
            strict_format: true,
            data_dir: PathBuf::from("data"),
            port: 8080,
            snapshot_every: 64,
        }
    }
}

impl Config {
    pub fn from_toml(source: &str) -> Result<Self, ConfigError> {
        toml::from_str(source).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads `path` when given, then applies overrides from `env`.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let source = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                Self::from_toml(&source)?
            }
            None => Self::default(),
        };
        config.apply_env(env)?;
        config.validate()?;
        Ok(config)
    }

    /// Overrides keys from variables named like the keys, upper-cased.
    pub fn apply_env(&mut self, env: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        fn parse<T: FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.trim().parse().map_err(|e: T::Err| ConfigError::Value {
                key,
                message: e.to_string(),
            })
        }
        for (k, v) in env {
            match k.as_str() {
                "SIMILARITY_THRESHOLD" => self.similarity_threshold = parse("similarity_threshold", &v)?,
                "TOP_N" => self.top_n = parse("top_n", &v)?,
                "MAX_DEPTH" => self.max_depth = parse("max_depth", &v)?,
                "EMBEDDING_PROVIDER" => self.embedding_provider = parse("embedding_provider", &v)?,
                "STRICT_FORMAT" => self.strict_format = parse("strict_format", &v)?,
                "DATA_DIR" => self.data_dir = PathBuf::from(v),
                "PORT" => self.port = parse("port", &v)?,
                "SNAPSHOT_EVERY" => self.snapshot_every = parse("snapshot_every", &v)?,
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = self.similarity_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(ConfigError::Value {
                key: "similarity_threshold",
                message: format!("{t} is outside (0, 1)"),
            });
        }
        if self.top_n == 0 {
            return Err(ConfigError::Value {
                key: "top_n",
                message: "must be at least 1".into(),
            });
        }
        if self.max_depth == 0 {
            return Err(ConfigError::Value {
                key: "max_depth",
                message: "must be at least 1".into(),
            });
        }
        if self.snapshot_every == 0 {
            return Err(ConfigError::Value {
                key: "snapshot_every",
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            similarity_threshold: self.similarity_threshold,
            top_n: self.top_n,
            max_depth: self.max_depth,
        }
    }

    pub fn format_mode(&self) -> FormatMode {
        FormatMode::from_strict(self.strict_format)
    }
}
