use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_normalization::{char::is_combining_mark, UnicodeNormalization};

use super::synonyms::SynonymDict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub preserve_diacritics: bool,
    pub stopwords: BTreeSet<String>,
    pub synonyms: SynonymDict,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            preserve_diacritics: true,
            stopwords: BTreeSet::new(),
            synonyms: SynonymDict::default(),
        }
    }
}

impl AnalyzerConfig {
    /// One stopword per line; blank lines and `#` comments skipped.
    pub fn with_stopwords_text(mut self, text: &str) -> Self {
        self.stopwords = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        self
    }
}

/// Text analysis: split, case-fold, optional diacritic folding, stopword
/// removal. No stemming.
#[derive(Debug, Clone)]
pub struct Analyzer {
    config: AnalyzerConfig,
    stopwords: BTreeSet<String>,
}

impl Analyzer {
    pub fn new(config: AnalyzerConfig) -> Self {
        let mut a = Self {
            stopwords: BTreeSet::new(),
            config,
        };
        a.stopwords = a
            .config
            .stopwords
            .iter()
            .flat_map(|w| a.normalize_all(w))
            .collect();
        a
    }

    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    pub fn synonyms(&self) -> &SynonymDict {
        &self.config.synonyms
    }

    fn normalize_token(&self, raw: &str) -> String {
        let mut t = if self.config.lowercase {
            raw.to_lowercase()
        } else {
            raw.to_string()
        };
        if !self.config.preserve_diacritics {
            t = fold_diacritics(&t);
        }
        t
    }

    fn split<'t>(&self, text: &'t str) -> Box<dyn Iterator<Item = &'t str> + 't> {
        if self.config.strip_punctuation {
            Box::new(text.split(|c: char| !c.is_alphanumeric()))
        } else {
            Box::new(text.split(char::is_whitespace))
        }
    }

    /// Tokens of `text` without stopword removal.
    pub fn normalize_all(&self, text: &str) -> Vec<String> {
        self.split(text)
            .filter(|t| !t.is_empty())
            .map(|t| self.normalize_token(t))
            .collect()
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        self.split(text)
            .filter(|t| !t.is_empty())
            .map(|t| self.normalize_token(t))
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }
}

/// Convenience form of [`Analyzer::analyze`].
pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    Analyzer::new(config.clone()).analyze(text)
}

fn fold_diacritics(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            'ł' => "l".chars().collect::<Vec<_>>(),
            'Ł' => vec!['L'],
            'ø' => vec!['o'],
            'Ø' => vec!['O'],
            'đ' => vec!['d'],
            'ß' => vec!['s', 's'],
            other => other.nfd().filter(|c| !is_combining_mark(*c)).collect(),
        })
        .collect()
}
