mod common;

use std::collections::{BTreeMap, HashMap};

use medcourse_core::corpus::CorpusStore;
use medcourse_core::retrieval::{
    AnalyzerConfig, Bm25Params, Hit, InvertedIndex, SearchEngine, SynonymDict, WeightedQuery,
};
use medcourse_core::Execution;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

use common::{doc, random_corpus, rng, vocab};

/// Straight-line BM25 over whitespace tokens, scanning every document.
fn brute_force(store: &CorpusStore, q: &WeightedQuery, k: usize, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<(&str, Vec<&str>)> = store
        .iter()
        .map(|d| (d.doc_id.as_str(), d.paragraph.split_whitespace().collect()))
        .collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut scored = Vec::new();
    for (id, toks) in &docs {
        let mut score = 0.0;
        for (term, w) in q {
            let tf = toks.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|(_, t)| t.contains(&term.as_str())).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = 1.0 - b + b * toks.len() as f64 / avg;
            score += w * idf * tf * (k1 + 1.0) / (tf + k1 * norm);
        }
        if score > 0.0 {
            scored.push((id.to_string(), score));
        }
    }
    scored.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    scored.truncate(k);
    scored
}

fn random_query(rng: &mut impl Rng, vocab: &[String]) -> WeightedQuery {
    let mut q = BTreeMap::new();
    for _ in 0..rng.random_range(1..=5) {
        let term = if rng.random_bool(0.1) {
            "absent".to_string()
        } else {
            vocab.choose(rng).unwrap().clone()
        };
        let w = if rng.random_bool(0.3) { 0.5 } else { 1.0 };
        q.insert(term, w);
    }
    q
}

fn assert_matches(got: &[Hit], want: &[(String, f64)]) {
    assert_eq!(
        got.iter().map(|h| h.doc_id.as_str()).collect::<Vec<_>>(),
        want.iter().map(|w| w.0.as_str()).collect::<Vec<_>>()
    );
    for (g, (_, w)) in got.iter().zip(want) {
        assert!(((g.score - w) / w).abs() <= 1e-9, "{} vs {w}", g.score);
    }
}

#[test]
fn matches_brute_force_on_random_corpora() {
    let mut r = rng(7);
    let mut queries = 0;
    for round in 0..12 {
        let v = vocab(10 + round * 5);
        let n_docs = r.random_range(1..=100);
        let store = random_corpus(&mut r, n_docs, &v, 40);
        let engine = SearchEngine::build(store.clone(), AnalyzerConfig::default(), Execution::Parallel);
        for _ in 0..100 {
            let q = random_query(&mut r, &v);
            let k = r.random_range(1..=120);
            let got = engine.index().search(&q, k, Bm25Params::default());
            assert_matches(&got, &brute_force(&store, &q, k, 1.2, 0.75));
            queries += 1;
        }
    }
    assert!(queries >= 1000);
}

#[test]
fn non_default_params_match_too() {
    let mut r = rng(99);
    let v = vocab(20);
    let store = random_corpus(&mut r, 60, &v, 30);
    let params = Bm25Params::new(2.0, 0.3).unwrap();
    let engine = SearchEngine::build(store.clone(), AnalyzerConfig::default(), Execution::Sequential)
        .with_params(params);
    for _ in 0..50 {
        let q = random_query(&mut r, &v);
        assert_matches(&engine.index().search(&q, 100, engine.params()), &brute_force(&store, &q, 100, 2.0, 0.3));
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let mut r = rng(3);
    let v = vocab(30);
    let store = random_corpus(&mut r, 100, &v, 50);
    let analyzer = AnalyzerConfig::default();
    let cfg = medcourse_core::retrieval::Analyzer::new(analyzer.clone());
    let seq = InvertedIndex::build(&store, &cfg, Execution::Sequential);
    let par = InvertedIndex::build(&store, &cfg, Execution::Parallel);
    assert_eq!(seq, par);
    let queries: Vec<_> = (0..50).map(|_| random_query(&mut r, &v)).collect();
    assert_eq!(
        seq.search_batch(&queries, 20, Bm25Params::default(), Execution::Sequential),
        par.search_batch(&queries, 20, Bm25Params::default(), Execution::Parallel)
    );
}

#[test]
fn synonym_recall() {
    let store = CorpusStore::from_documents(vec![
        doc("d1", "zawał"),
        doc("d2", "niewydolność nerek"),
    ])
    .unwrap();
    let mut cfg = AnalyzerConfig::default();
    cfg.synonyms = SynonymDict::from(vec![vec!["zawał".to_string(), "infarkt".to_string()]]);
    let engine = SearchEngine::build(store, cfg, Execution::Sequential);
    let hits = engine.search_text("Infarkt", 10);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].doc_id, "d1");
    assert!(hits[0].score > 0.0);
}

#[test]
fn deterministic_repeats() {
    let mut r = rng(11);
    let v = vocab(15);
    let engine = SearchEngine::build(random_corpus(&mut r, 80, &v, 20), AnalyzerConfig::default(), Execution::Parallel);
    let first = engine.search_text("t1 t2 t3", 50);
    for _ in 0..5 {
        assert_eq!(engine.search_text("t1 t2 t3", 50), first);
    }
}

#[test]
fn save_and_load_round_trip() {
    let mut r = rng(5);
    let v = vocab(12);
    let engine = SearchEngine::build(random_corpus(&mut r, 30, &v, 20), AnalyzerConfig::default(), Execution::Parallel);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.json");
    engine.save(&path).unwrap();
    let back = SearchEngine::load(&path).unwrap();
    assert_eq!(back.search_text("t4 t7", 30), engine.search_text("t4 t7", 30));
}

fn score_of(paragraphs: &[String], query: &str, target: usize) -> f64 {
    let docs = paragraphs
        .iter()
        .enumerate()
        .map(|(i, p)| doc(&format!("d{i:02}"), p))
        .collect();
    let engine = SearchEngine::build(CorpusStore::from_documents(docs).unwrap(), AnalyzerConfig::default(), Execution::Sequential);
    let id = format!("d{target:02}");
    engine
        .search_text(query, paragraphs.len())
        .into_iter()
        .find(|h| h.doc_id == id)
        .map_or(0.0, |h| h.score)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// One more occurrence of a query term in a document: the document
    /// grows by one token and its score does not drop.
    #[test]
    fn extra_occurrence_never_lowers_score(
        paras in prop::collection::vec(prop::collection::vec(0usize..8, 1..15), 2..12),
        target_ix in any::<prop::sample::Index>(),
        term in 0usize..8,
    ) {
        let render = |ws: &Vec<usize>| ws.iter().map(|w| format!("w{w}")).collect::<Vec<_>>().join(" ");
        let target = target_ix.index(paras.len());
        let before: Vec<String> = paras.iter().map(render).collect();
        let mut after = before.clone();
        after[target].push_str(&format!(" w{term}"));
        let query = format!("w{term}");
        let s0 = score_of(&before, &query, target);
        let s1 = score_of(&after, &query, target);
        prop_assert!(s1 >= s0 - 1e-12, "{s0} -> {s1}");
    }
}

#[test]
fn df_counts_match_postings() {
    let mut r = rng(21);
    let v = vocab(25);
    let store = random_corpus(&mut r, 70, &v, 25);
    let analyzer = medcourse_core::retrieval::Analyzer::new(AnalyzerConfig::default());
    let index = InvertedIndex::build(&store, &analyzer, Execution::Parallel);
    let mut df: HashMap<&str, usize> = HashMap::new();
    for d in store.iter() {
        let mut seen: Vec<&str> = d.paragraph.split_whitespace().collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    for (t, n) in df {
        assert_eq!(index.postings(t).len(), n, "{t}");
    }
    let total: u32 = store.iter().map(|d| index.doc_length(&d.doc_id).unwrap()).sum();
    assert!((index.avg_doc_length() - total as f64 / 70.0).abs() < 1e-12);
}
