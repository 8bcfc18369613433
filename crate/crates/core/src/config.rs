//! Runtime settings, read from a flat `key = value` TOML file.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genpipe::{GenParams, HttpProvider, MockProvider, TextGenProvider};
use crate::http::EndpointConfig;
use crate::rerank::{remote_scorer, LexicalOverlapScorer, RelevanceScorer, RerankMode, RerankVariant};
use crate::retrieval::{Analyzer, AnalyzerConfig, SynonymDict};
use crate::scheduler::RetentionThreshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Lexical,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub provider: ProviderKind,
    pub provider_url: Option<String>,
    pub provider_model: String,
    pub scorer: ScorerKind,
    pub scorer_url: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub rerank_mode: RerankVariant,
    /// Overrides the mode's default candidate cap.
    pub rerank_cap: Option<usize>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub seed: Option<u64>,
    pub workers: usize,
    pub daily_new_cap: usize,
    pub r_target: f64,
    /// One stopword per line; relative paths resolve against the config file.
    pub stopwords: Option<PathBuf>,
    /// One synonym class per line, comma separated.
    pub synonyms: Option<PathBuf>,
    pub preserve_diacritics: bool,
}

impl Default for Config {
    fn default() -> Self {
        let gen = GenParams::default();
        let ep = EndpointConfig::new("");
        Self {
            provider: ProviderKind::Mock,
            provider_url: None,
            provider_model: "mock".into(),
            scorer: ScorerKind::Lexical,
            scorer_url: None,
            timeout_ms: ep.timeout_ms,
            retries: ep.retries,
            backoff_ms: ep.backoff_ms,
            rerank_mode: RerankVariant::Refined,
            rerank_cap: None,
            temperature: gen.temperature,
            max_output_tokens: gen.max_output_tokens,
            seed: gen.seed,
            workers: 4,
            daily_new_cap: 20,
            r_target: 0.9,
            stopwords: None,
            synonyms: None,
            preserve_diacritics: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; relative data-file paths become relative to its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.stopwords, &mut cfg.synonyms].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        RetentionThreshold::new(self.r_target).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.provider == ProviderKind::Http && self.provider_url.is_none() {
            return Err(ConfigError::Invalid("provider = \"http\" needs provider_url".into()));
        }
        if self.scorer == ScorerKind::Http && self.scorer_url.is_none() {
            return Err(ConfigError::Invalid("scorer = \"http\" needs scorer_url".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.rerank_cap == Some(0) {
            return Err(ConfigError::Invalid("rerank_cap must be positive".into()));
        }
        Ok(())
    }

    pub fn threshold(&self) -> RetentionThreshold {
        RetentionThreshold::new(self.r_target).unwrap_or_default()
    }

    pub fn rerank_mode(&self) -> RerankMode {
        let mode = RerankMode::from(self.rerank_mode);
        match self.rerank_cap {
            Some(cap) => mode.with_cap(cap),
            None => mode,
        }
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            seed: self.seed,
        }
    }

    fn endpoint(&self, url: &str) -> EndpointConfig {
        EndpointConfig {
            url: url.into(),
            timeout_ms: self.timeout_ms,
            retries: self.retries,
            backoff_ms: self.backoff_ms,
        }
    }

    /// Analyzer settings with the stopword and synonym files loaded.
    pub fn analyzer_config(&self) -> Result<AnalyzerConfig, ConfigError> {
        let read = |p: &PathBuf| {
            fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.clone(),
                source,
            })
        };
        let mut cfg = AnalyzerConfig {
            preserve_diacritics: self.preserve_diacritics,
            ..AnalyzerConfig::default()
        };
        if let Some(p) = &self.stopwords {
            cfg = cfg.with_stopwords_text(&read(p)?);
        }
        if let Some(p) = &self.synonyms {
            let text = read(p)?;
            cfg.synonyms = SynonymDict::parse(&text, &Analyzer::new(cfg.clone()));
        }
        Ok(cfg)
    }

    pub fn build_provider(&self, analyzer: Analyzer) -> Arc<dyn TextGenProvider> {
        match (self.provider, &self.provider_url) {
            (ProviderKind::Http, Some(url)) => {
                Arc::new(HttpProvider::new(self.endpoint(url), self.provider_model.clone()))
            }
            _ => Arc::new(MockProvider::new(analyzer)),
        }
    }

    pub fn build_scorer(&self, analyzer: Analyzer) -> Arc<dyn RelevanceScorer> {
        match (self.scorer, &self.scorer_url) {
            (ScorerKind::Http, Some(url)) => Arc::new(remote_scorer(self.endpoint(url))),
            _ => Arc::new(LexicalOverlapScorer::new(analyzer)),
        }
    }
}
