use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::analyzer::Analyzer;
use super::synonyms::WeightedQuery;
use crate::corpus::CorpusStore;
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the document in [`InvertedIndex::doc_ids`].
    pub doc: u32,
    pub tf: u32,
}

/// Term → postings over analyzed paragraph text. Documents are numbered in
/// ascending `doc_id` order so every postings list is sorted by doc id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("k1 must be >= 0, got {0}")]
    K1(f64),
    #[error("b must lie in [0, 1], got {0}")]
    B(f64),
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, ParamError> {
        if !(k1 >= 0.0) || !k1.is_finite() {
            return Err(ParamError::K1(k1));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(ParamError::B(b));
        }
        Ok(Self { k1, b })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; positive for every df <= N.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

impl InvertedIndex {
    pub fn build(store: &CorpusStore, analyzer: &Analyzer, exec: Execution) -> Self {
        let mut docs: Vec<&str> = store.iter().map(|d| d.doc_id.as_str()).collect();
        docs.sort_unstable();
        let tokenized: Vec<Vec<String>> = exec.map(&docs, |id| {
            let doc = store.get(id).expect("id taken from the store");
            analyzer.analyze(&doc.paragraph)
        });

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (i, tokens) in tokenized.iter().enumerate() {
            doc_lengths.push(tokens.len() as u32);
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, tf) in tf {
                postings.entry(term.to_string()).or_default().push(Posting {
                    doc: i as u32,
                    tf,
                });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = if docs.is_empty() {
            0.0
        } else {
            total as f64 / docs.len() as f64
        };
        Self {
            doc_ids: docs.into_iter().map(str::to_string).collect(),
            doc_lengths,
            avg_doc_length,
            postings,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.position(doc_id).map(|i| self.doc_lengths[i])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    fn position(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc_id))
            .ok()
    }

    /// Exact top-`k` BM25 ranking. Ties go to the smaller doc id; documents
    /// with no matching term are never returned.
    pub fn search(&self, query: &WeightedQuery, k: usize, params: Bm25Params) -> Vec<Hit> {
        if k == 0 || self.doc_ids.is_empty() {
            return Vec::new();
        }
        let n = self.doc_ids.len();
        let mut scores = vec![0.0f64; n];
        let mut touched: Vec<u32> = Vec::new();
        for (term, &weight) in query {
            let list = self.postings(term);
            if list.is_empty() || weight <= 0.0 {
                continue;
            }
            let term_idf = idf(n, list.len());
            for p in list {
                let i = p.doc as usize;
                if scores[i] == 0.0 {
                    touched.push(p.doc);
                }
                let tf = p.tf as f64;
                let len = self.doc_lengths[i] as f64;
                let norm = params.k1 * (1.0 - params.b + params.b * len / self.avg_doc_length);
                scores[i] += weight * term_idf * tf * (params.k1 + 1.0) / (tf + norm);
            }
        }
        let mut hits: Vec<(u32, f64)> = touched
            .into_iter()
            .map(|d| (d, scores[d as usize]))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        let order = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, order);
            hits.truncate(k);
        }
        hits.sort_unstable_by(order);
        hits.into_iter()
            .map(|(d, score)| Hit {
                doc_id: self.doc_ids[d as usize].clone(),
                score,
            })
            .collect()
    }

    pub fn search_batch(
        &self,
        queries: &[WeightedQuery],
        k: usize,
        params: Bm25Params,
        exec: Execution,
    ) -> Vec<Vec<Hit>> {
        exec.map(queries, |q| self.search(q, k, params))
    }
}
