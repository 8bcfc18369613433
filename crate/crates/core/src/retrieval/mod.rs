//! Keyword retrieval: analysis with synonym expansion, an inverted index and
//! BM25 ranking.

mod analyzer;
mod index;
mod synonyms;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analyzer::{analyze, Analyzer, AnalyzerConfig};
pub use index::{idf, Bm25Params, Hit, InvertedIndex, ParamError, Posting};
pub use synonyms::{expand_query, SynonymDict, WeightedQuery, SYNONYM_WEIGHT};

use crate::corpus::CorpusStore;
use crate::exec::Execution;

#[derive(Debug, Error)]
pub enum IndexFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("index file: {0}")]
    Format(#[from] serde_json::Error),
}

/// Everything needed to answer queries: analyzer settings (stopwords and
/// synonyms included), the corpus, and the index built over it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchEngine {
    analyzer: AnalyzerConfig,
    corpus: CorpusStore,
    index: InvertedIndex,
    #[serde(default)]
    params: Bm25Params,
    #[serde(skip)]
    compiled: Option<Analyzer>,
}

impl SearchEngine {
    pub fn build(corpus: CorpusStore, analyzer: AnalyzerConfig, exec: Execution) -> Self {
        let compiled = Analyzer::new(analyzer.clone());
        let index = InvertedIndex::build(&corpus, &compiled, exec);
        Self {
            analyzer,
            corpus,
            index,
            params: Bm25Params::default(),
            compiled: Some(compiled),
        }
    }

    pub fn with_params(mut self, params: Bm25Params) -> Self {
        self.params = params;
        self
    }

    pub fn analyzer(&self) -> Analyzer {
        self.compiled
            .clone()
            .unwrap_or_else(|| Analyzer::new(self.analyzer.clone()))
    }

    pub fn corpus(&self) -> &CorpusStore {
        &self.corpus
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Analyzes and expands free text into a weighted query.
    pub fn prepare(&self, text: &str) -> WeightedQuery {
        let analyzer = self.analyzer();
        expand_query(&analyzer.analyze(text), analyzer.synonyms())
    }

    pub fn search_text(&self, text: &str, k: usize) -> Vec<Hit> {
        self.index.search(&self.prepare(text), k, self.params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexFileError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexFileError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut engine: SearchEngine = serde_json::from_reader(file)?;
        engine.compiled = Some(Analyzer::new(engine.analyzer.clone()));
        Ok(engine)
    }
}
