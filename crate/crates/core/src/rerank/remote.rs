use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Passage, RelevanceScorer, ScoreFailure};
use crate::http::{EndpointConfig, JsonClient};

#[derive(Serialize)]
struct ScoreRequest<'a> {
    query: &'a str,
    passages: Vec<Passage<'a>>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<ScoredPassage>,
}

#[derive(Deserialize)]
struct ScoredPassage {
    id: String,
    score: f64,
}

/// Adapter for an external cross-encoder behind `POST /score`.
///
/// Scores are cached per `(query, doc_id)` for the lifetime of the adapter;
/// build one adapter per pipeline run.
#[derive(Debug)]
pub struct RemoteScorer {
    client: JsonClient,
    cache: Mutex<HashMap<(String, String), f64>>,
}

pub fn remote_scorer(config: EndpointConfig) -> RemoteScorer {
    RemoteScorer {
        client: JsonClient::new(config),
        cache: Mutex::new(HashMap::new()),
    }
}

impl RemoteScorer {
    pub fn cached(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }

    pub fn clear_cache(&self) {
        if let Ok(mut c) = self.cache.lock() {
            c.clear();
        }
    }

    fn lookup(&self, query: &str, id: &str) -> Option<f64> {
        let cache = self.cache.lock().unwrap_or_else(|p| p.into_inner());
        cache.get(&(query.to_string(), id.to_string())).copied()
    }
}

impl RelevanceScorer for RemoteScorer {
    fn score(&self, query: &str, passage: Passage<'_>) -> Result<f64, ScoreFailure> {
        Ok(self.score_batch(query, &[passage])?[0])
    }

    fn score_batch(&self, query: &str, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreFailure> {
        let mut out: Vec<Option<f64>> = passages.iter().map(|p| self.lookup(query, p.id)).collect();
        let missing: Vec<Passage<'_>> = passages
            .iter()
            .zip(&out)
            .filter(|(_, s)| s.is_none())
            .map(|(p, _)| *p)
            .collect();
        if !missing.is_empty() {
            let first = missing[0].id.to_string();
            let resp: ScoreResponse = self
                .client
                .post(
                    "/score",
                    &ScoreRequest {
                        query,
                        passages: missing.clone(),
                    },
                )
                .map_err(|(message, attempts)| ScoreFailure {
                    doc_id: Some(first.clone()),
                    message: format!("scoring service failed after {attempts} attempts: {message}"),
                })?;
            let by_id: HashMap<String, f64> =
                resp.scores.into_iter().map(|s| (s.id, s.score)).collect();
            let mut cache = self.cache.lock().unwrap_or_else(|p| p.into_inner());
            for p in &missing {
                let s = *by_id.get(p.id).ok_or_else(|| ScoreFailure {
                    doc_id: Some(p.id.to_string()),
                    message: "scoring service omitted this passage".into(),
                })?;
                cache.insert((query.to_string(), p.id.to_string()), s);
            }
            for (slot, p) in out.iter_mut().zip(passages) {
                if slot.is_none() {
                    *slot = cache.get(&(query.to_string(), p.id.to_string())).copied();
                }
            }
        }
        Ok(out.into_iter().map(|s| s.expect("filled above")).collect())
    }
}
