//! Second-stage reranking of first-stage candidates.
//!
//! Two modes: [`RerankVariant::Base`] scores the top 100 candidates on their
//! snippets; [`RerankVariant::Refined`] scores the top 200 on full
//! paragraphs. Candidates past the cap are dropped.

mod lexical;
mod remote;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexical::{lexical_overlap_scorer, LexicalOverlapScorer};
pub use remote::{remote_scorer, RemoteScorer};

use crate::corpus::{CorpusDocument, CorpusStore};
use crate::exec::Execution;
use crate::retrieval::Hit;

pub const BASE_CAP: usize = 100;
pub const REFINED_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankVariant {
    Base,
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankContext {
    Snippet,
    FullParagraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankMode {
    pub variant: RerankVariant,
    pub candidate_cap: usize,
    pub context: RerankContext,
}

impl RerankMode {
    pub const fn base() -> Self {
        Self {
            variant: RerankVariant::Base,
            candidate_cap: BASE_CAP,
            context: RerankContext::Snippet,
        }
    }

    pub const fn refined() -> Self {
        Self {
            variant: RerankVariant::Refined,
            candidate_cap: REFINED_CAP,
            context: RerankContext::FullParagraph,
        }
    }

    /// Same context, different cap (deployments that use another value
    /// inside the 100–200 range).
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.candidate_cap = cap;
        self
    }

    pub fn passage_text(self, doc: &CorpusDocument) -> &str {
        match self.context {
            RerankContext::Snippet => &doc.snippet,
            RerankContext::FullParagraph => &doc.paragraph,
        }
    }
}

impl From<RerankVariant> for RerankMode {
    fn from(v: RerankVariant) -> Self {
        match v {
            RerankVariant::Base => Self::base(),
            RerankVariant::Refined => Self::refined(),
        }
    }
}

impl std::str::FromStr for RerankVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Self::Base),
            "refined" => Ok(Self::Refined),
            other => Err(format!("unknown rerank mode {other:?} (expected base|refined)")),
        }
    }
}

/// A passage handed to a scorer.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Passage<'a> {
    pub id: &'a str,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct ScoreFailure {
    /// The passage that could not be scored, when known.
    pub doc_id: Option<String>,
    pub message: String,
}

/// Query/passage relevance in `[0, 1]`. Implementations are shared across
/// scoring threads.
pub trait RelevanceScorer: Send + Sync {
    fn score(&self, query: &str, passage: Passage<'_>) -> Result<f64, ScoreFailure>;

    /// Scores several passages against one query. The default scores them
    /// one by one; remote scorers override it to batch requests.
    fn score_batch(&self, query: &str, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreFailure> {
        passages.iter().map(|p| self.score(query, *p)).collect()
    }
}

impl<S: RelevanceScorer + ?Sized> RelevanceScorer for &S {
    fn score(&self, query: &str, passage: Passage<'_>) -> Result<f64, ScoreFailure> {
        (**self).score(query, passage)
    }

    fn score_batch(&self, query: &str, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreFailure> {
        (**self).score_batch(query, passages)
    }
}

impl<S: RelevanceScorer + ?Sized> RelevanceScorer for Box<S> {
    fn score(&self, query: &str, passage: Passage<'_>) -> Result<f64, ScoreFailure> {
        (**self).score(query, passage)
    }

    fn score_batch(&self, query: &str, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreFailure> {
        (**self).score_batch(query, passages)
    }
}

impl<S: RelevanceScorer + ?Sized> RelevanceScorer for std::sync::Arc<S> {
    fn score(&self, query: &str, passage: Passage<'_>) -> Result<f64, ScoreFailure> {
        (**self).score(query, passage)
    }

    fn score_batch(&self, query: &str, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreFailure> {
        (**self).score_batch(query, passages)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RerankError {
    #[error("scoring {doc_id} failed: {message}")]
    Scorer { doc_id: String, message: String },
    #[error("candidate {0} is not in the corpus")]
    UnknownDocument(String),
    #[error("scorer returned {score} for {doc_id}, outside [0, 1]")]
    OutOfRange { doc_id: String, score: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reranked {
    pub doc_id: String,
    pub rerank_score: f64,
    pub first_stage_score: f64,
    /// Zero-based position in the first-stage list.
    pub first_stage_rank: usize,
}

/// Settings for how the capped candidate set is scored.
#[derive(Debug, Clone, Copy)]
pub struct RerankOptions {
    pub exec: Execution,
    /// Passages per scorer call.
    pub chunk: usize,
}

impl Default for RerankOptions {
    fn default() -> Self {
        Self {
            exec: Execution::Parallel,
            chunk: 16,
        }
    }
}

/// Rescores the first `min(cap, n)` candidates with `scorer` on the text the
/// mode selects and returns them by descending rerank score, ties kept in
/// first-stage order. Any scoring failure fails the whole call.
pub fn rerank(
    candidates: &[Hit],
    mode: RerankMode,
    scorer: &dyn RelevanceScorer,
    query_text: &str,
    corpus: &CorpusStore,
    options: RerankOptions,
) -> Result<Vec<Reranked>, RerankError> {
    let capped = &candidates[..candidates.len().min(mode.candidate_cap)];
    let passages: Vec<Passage<'_>> = capped
        .iter()
        .map(|h| {
            corpus
                .get(&h.doc_id)
                .map(|d| Passage {
                    id: &d.doc_id,
                    text: mode.passage_text(d),
                })
                .ok_or_else(|| RerankError::UnknownDocument(h.doc_id.clone()))
        })
        .collect::<Result<_, _>>()?;

    let chunks: Vec<&[Passage<'_>]> = passages.chunks(options.chunk.max(1)).collect();
    let scored: Vec<Vec<f64>> = options.exec.try_map(&chunks, |chunk| {
        let scores = scorer
            .score_batch(query_text, chunk)
            .map_err(|f| RerankError::Scorer {
                doc_id: f.doc_id.unwrap_or_else(|| chunk[0].id.to_string()),
                message: f.message,
            })?;
        if scores.len() != chunk.len() {
            return Err(RerankError::Scorer {
                doc_id: chunk[0].id.to_string(),
                message: format!("expected {} scores, got {}", chunk.len(), scores.len()),
            });
        }
        for (p, &s) in chunk.iter().zip(&scores) {
            if !(0.0..=1.0).contains(&s) {
                return Err(RerankError::OutOfRange {
                    doc_id: p.id.to_string(),
                    score: s,
                });
            }
        }
        Ok(scores)
    })?;

    let mut out: Vec<Reranked> = capped
        .iter()
        .zip(scored.into_iter().flatten())
        .enumerate()
        .map(|(rank, (hit, s))| Reranked {
            doc_id: hit.doc_id.clone(),
            rerank_score: s,
            first_stage_score: hit.score,
            first_stage_rank: rank,
        })
        .collect();
    out.sort_by(|a, b| match b.rerank_score.total_cmp(&a.rerank_score) {
        Ordering::Equal => a.first_stage_rank.cmp(&b.first_stage_rank),
        o => o,
    });
    Ok(out)
}
