use std::collections::HashMap;

use super::{Passage, RelevanceScorer, ScoreFailure};
use crate::retrieval::{Analyzer, AnalyzerConfig};

/// Cosine similarity of term-frequency vectors. Runs without any model so
/// the pipeline works end to end offline.
#[derive(Debug, Clone)]
pub struct LexicalOverlapScorer {
    analyzer: Analyzer,
}

impl Default for LexicalOverlapScorer {
    fn default() -> Self {
        Self::new(Analyzer::new(AnalyzerConfig::default()))
    }
}

impl LexicalOverlapScorer {
    pub fn new(analyzer: Analyzer) -> Self {
        Self { analyzer }
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        let (toks_a, toks_b) = (self.analyzer.analyze(a), self.analyzer.analyze(b));
        let (ta, tb) = (tf(&toks_a), tf(&toks_b));
        if ta.is_empty() || tb.is_empty() {
            return 0.0;
        }
        let dot: u64 = ta
            .iter()
            .filter_map(|(t, &x)| tb.get(t).map(|&y| x * y))
            .sum();
        let na: u64 = ta.values().map(|x| x * x).sum();
        let nb: u64 = tb.values().map(|x| x * x).sum();
        (dot as f64 / ((na * nb) as f64).sqrt()).clamp(0.0, 1.0)
    }
}

fn tf(tokens: &[String]) -> HashMap<&str, u64> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_default() += 1;
    }
    m
}

impl RelevanceScorer for LexicalOverlapScorer {
    fn score(&self, query: &str, passage: Passage<'_>) -> Result<f64, ScoreFailure> {
        Ok(self.similarity(query, passage.text))
    }
}

/// [`LexicalOverlapScorer::similarity`] with the default analyzer.
pub fn lexical_overlap_scorer(query_text: &str, passage_text: &str) -> f64 {
    LexicalOverlapScorer::default().similarity(query_text, passage_text)
}
