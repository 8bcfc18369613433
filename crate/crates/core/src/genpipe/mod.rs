//! Generation stages: question → search query, retrieval and reranking,
//! grounded prompt, comment with validated citations.

mod prompt;
mod provider;

use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use prompt::{PromptTemplates, PROMPT_DOCS};
pub use provider::{GenParams, HttpProvider, MockProvider, ProviderError, TextGenProvider};

use crate::clock::Clock;
use crate::corpus::{CorpusDocument, SourceKind};
use crate::exam::ExamQuestion;
use crate::exec::Execution;
use crate::rerank::{rerank, RelevanceScorer, RerankError, RerankMode, RerankOptions};
use crate::retrieval::SearchEngine;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("provider failed: {0}")]
    Provider(#[from] ProviderError),
    #[error("provider returned an empty query")]
    EmptyQuery,
    #[error("query ({query_len} chars) is not shorter than the question ({question_len} chars)")]
    QueryTooLong { query_len: usize, question_len: usize },
    #[error("expected exactly {PROMPT_DOCS} documents, got {got}")]
    DocCount { got: usize },
    #[error("comment cites unknown document {0:?}")]
    Citation(String),
    #[error("prompt template: {0}")]
    Template(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub question_id: String,
    pub query_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub difficulties: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderMeta {
    pub model: String,
    pub params: GenParams,
    pub template_version: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedComment {
    pub question_id: String,
    /// Text with inline `[doc:ID]` markers.
    pub body: String,
    /// Cited ids in order of first appearance.
    pub citations: Vec<String>,
    pub provider_meta: ProviderMeta,
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[doc:([^\[\]\s]+)\]").expect("valid regex"))
}

/// Ids of all `[doc:ID]` markers, deduplicated, in first-appearance order.
pub fn extract_citations(body: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for cap in marker_re().captures_iter(body) {
        let id = &cap[1];
        if !out.iter().any(|c| c == id) {
            out.push(id.to_string());
        }
    }
    out
}

/// Condenses a question into one search query.
pub fn rephrase(
    question: &ExamQuestion,
    provider: &dyn TextGenProvider,
    params: &GenParams,
    templates: &PromptTemplates,
) -> Result<SearchQuery, GenError> {
    let text = provider.generate(&templates.render_rephrase(question), params)?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let query_text = lines.next().unwrap_or_default().to_string();
    if query_text.is_empty() {
        return Err(GenError::EmptyQuery);
    }
    let question_len = question.full_text().chars().count();
    let query_len = query_text.chars().count();
    if query_len >= question_len {
        return Err(GenError::QueryTooLong {
            query_len,
            question_len,
        });
    }
    let difficulties = lines
        .filter_map(|l| {
            let (head, rest) = l.split_once(':')?;
            head.trim()
                .eq_ignore_ascii_case("difficulty")
                .then(|| rest.trim().to_string())
        })
        .filter(|d| !d.is_empty())
        .collect();
    Ok(SearchQuery {
        question_id: question.id(),
        query_text,
        difficulties,
    })
}

/// Renders the grounded prompt for exactly [`PROMPT_DOCS`] documents.
pub fn build_prompt(
    question: &ExamQuestion,
    docs: &[&CorpusDocument],
    templates: &PromptTemplates,
) -> Result<String, GenError> {
    templates.render_comment(question, docs)
}

/// Generates a comment and rejects it if any marker points outside the
/// supplied documents.
pub fn generate_comment(
    question: &ExamQuestion,
    docs: &[&CorpusDocument],
    provider: &dyn TextGenProvider,
    params: &GenParams,
    templates: &PromptTemplates,
    clock: &dyn Clock,
) -> Result<GeneratedComment, GenError> {
    let prompt = build_prompt(question, docs, templates)?;
    let body = provider.generate(&prompt, params)?;
    let citations = extract_citations(&body);
    if let Some(ghost) = citations
        .iter()
        .find(|c| !docs.iter().any(|d| &d.doc_id == *c))
    {
        return Err(GenError::Citation(ghost.clone()));
    }
    Ok(GeneratedComment {
        question_id: question.id(),
        body,
        citations,
        provider_meta: ProviderMeta {
            model: provider.model_name(),
            params: params.clone(),
            template_version: templates.version.clone(),
            timestamp: clock.now(),
        },
    })
}

/// A retrieved document as shown to annotators and learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub doc_id: String,
    pub title: String,
    pub source_kind: SourceKind,
    pub publication_date: NaiveDate,
    pub url_or_locator: String,
    pub snippet: String,
    pub paragraph: String,
    pub first_stage_score: f64,
    pub rerank_score: f64,
}

/// Everything produced for one question: the unit annotators review and the
/// course is assembled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionReport {
    pub question: ExamQuestion,
    pub query: SearchQuery,
    pub rerank_mode: RerankMode,
    pub docs: Vec<ReportDoc>,
    pub comment: GeneratedComment,
}

impl QuestionReport {
    pub fn question_id(&self) -> String {
        self.question.id()
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        self.docs.iter().map(|d| d.doc_id.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("rephrase: {0}")]
    Rephrase(GenError),
    #[error("rerank: {0}")]
    Rerank(#[from] RerankError),
    #[error("retrieve: only {got} documents available, {PROMPT_DOCS} required")]
    DocCount { got: usize },
    #[error("generate: {0}")]
    Generate(GenError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Rephrase(_) => "rephrase",
            PipelineError::Rerank(_) => "rerank",
            PipelineError::DocCount { .. } => "retrieve",
            PipelineError::Generate(_) => "generate",
        }
    }
}

/// Wiring for the full question → report pipeline.
pub struct Pipeline<'a> {
    pub engine: &'a SearchEngine,
    pub mode: RerankMode,
    pub scorer: &'a dyn RelevanceScorer,
    pub provider: &'a dyn TextGenProvider,
    pub params: GenParams,
    pub templates: &'a PromptTemplates,
    pub clock: &'a dyn Clock,
    pub rerank_options: RerankOptions,
}

impl<'a> Pipeline<'a> {
    /// Rephrase, search `cap` candidates, rerank, keep the top ten, generate.
    pub fn run(&self, question: &ExamQuestion) -> Result<QuestionReport, PipelineError> {
        let query = rephrase(question, self.provider, &self.params, self.templates)
            .map_err(PipelineError::Rephrase)?;
        let hits = self
            .engine
            .search_text(&query.query_text, self.mode.candidate_cap);
        let reranked = rerank(
            &hits,
            self.mode,
            self.scorer,
            &query.query_text,
            self.engine.corpus(),
            self.rerank_options,
        )?;
        if reranked.len() < PROMPT_DOCS {
            return Err(PipelineError::DocCount {
                got: reranked.len(),
            });
        }
        let top = &reranked[..PROMPT_DOCS];
        let docs: Vec<&CorpusDocument> = top
            .iter()
            .map(|r| {
                self.engine
                    .corpus()
                    .get(&r.doc_id)
                    .ok_or_else(|| RerankError::UnknownDocument(r.doc_id.clone()))
            })
            .collect::<Result<_, _>>()?;
        let comment = generate_comment(
            question,
            &docs,
            self.provider,
            &self.params,
            self.templates,
            self.clock,
        )
        .map_err(PipelineError::Generate)?;
        Ok(QuestionReport {
            question: question.clone(),
            query,
            rerank_mode: self.mode,
            docs: top
                .iter()
                .zip(docs)
                .map(|(r, d)| ReportDoc {
                    doc_id: d.doc_id.clone(),
                    title: d.title.clone(),
                    source_kind: d.source_kind,
                    publication_date: d.publication_date,
                    url_or_locator: d.url_or_locator.clone(),
                    snippet: d.snippet.clone(),
                    paragraph: d.paragraph.clone(),
                    first_stage_score: r.first_stage_score,
                    rerank_score: r.rerank_score,
                })
                .collect(),
            comment,
        })
    }

    /// Runs independent questions on at most `width` workers. Results come
    /// back in input order.
    pub fn run_batch(
        &self,
        questions: &[ExamQuestion],
        exec: Execution,
        width: usize,
    ) -> Vec<Result<QuestionReport, PipelineError>> {
        exec.map_bounded(width, questions, |q| self.run(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;
    use crate::corpus::test_support::doc;
    use crate::corpus::CorpusStore;
    use crate::exam::{Choice, Letter};
    use crate::rerank::LexicalOverlapScorer;
    use crate::retrieval::{Analyzer, AnalyzerConfig};

    struct Fixed(&'static str);

    impl TextGenProvider for Fixed {
        fn generate(&self, _p: &str, _g: &GenParams) -> Result<String, ProviderError> {
            Ok(self.0.to_string())
        }
        fn model_name(&self) -> String {
            "fixed".into()
        }
    }

    fn clock() -> FixedClock {
        FixedClock("2025-01-15T10:00:00Z".parse().unwrap())
    }

    fn analyzer() -> Analyzer {
        Analyzer::new(AnalyzerConfig::default().with_stopwords_text("w\nz\ni\nna\njest\nu\nco\nktóry\njakie\nto\n"))
    }

    fn question(stem: &str) -> ExamQuestion {
        ExamQuestion {
            exam_id: "KARD-2024".into(),
            question_no: 1,
            stem: stem.into(),
            choices: Letter::ALL
                .iter()
                .map(|&l| Choice { letter: l, text: format!("wariant {l} leczenia") })
                .collect(),
            correct: Letter::B,
            has_image: false,
            invalidated: false,
            specialty: "Kardiologia".into(),
            session: "Fall 2024".into(),
        }
    }

    fn ten_docs() -> Vec<CorpusDocument> {
        (1..=10)
            .map(|i| doc(&format!("D{i}"), SourceKind::Textbook, "2022-01-01", "akapit"))
            .collect()
    }

    #[test]
    fn extracts_in_first_appearance_order() {
        assert_eq!(
            extract_citations("x [doc:D3] y [doc:D1] z [doc:D3] [doc:] [doc:a b]"),
            ["D3", "D1"]
        );
    }

    #[test]
    fn mock_rephrase_is_deterministic_and_non_empty() {
        let mock = MockProvider::new(analyzer());
        let q = question("Który lek jest leczeniem z wyboru w zawale serca?");
        let a = rephrase(&q, &mock, &GenParams::default(), &PromptTemplates::default()).unwrap();
        let b = rephrase(&q, &mock, &GenParams::default(), &PromptTemplates::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.query_text, "lek leczeniem wyboru zawale serca");
        assert_eq!(a.question_id, "KARD-2024-q001");
    }

    #[test]
    fn empty_provider_output() {
        let q = question("Pytanie");
        assert_eq!(
            rephrase(&q, &Fixed("  \n"), &GenParams::default(), &PromptTemplates::default()),
            Err(GenError::EmptyQuery)
        );
    }

    #[test]
    fn overlong_query_rejected() {
        let q = question("Krótkie");
        let long = Box::leak("x".repeat(500).into_boxed_str());
        assert!(matches!(
            rephrase(&q, &Fixed(long), &GenParams::default(), &PromptTemplates::default()),
            Err(GenError::QueryTooLong { .. })
        ));
    }

    #[test]
    fn difficulties_recorded() {
        let q = question("Długie pytanie o diagnostykę i leczenie niewydolności serca u dorosłych");
        let out = rephrase(
            &q,
            &Fixed("niewydolność serca diagnostyka leczenie\nDIFFICULTY: klasyfikacja NYHA\nDifficulty: dawkowanie"),
            &GenParams::default(),
            &PromptTemplates::default(),
        )
        .unwrap();
        assert_eq!(out.query_text, "niewydolność serca diagnostyka leczenie");
        assert_eq!(out.difficulties, ["klasyfikacja NYHA", "dawkowanie"]);
    }

    #[test]
    fn multi_topic_question_yields_one_query_covering_both() {
        let mock = MockProvider::new(analyzer());
        let q = question(
            "Jakie badanie potwierdza rozpoznanie zatorowości płucnej i jakie leczenie przeciwkrzepliwe należy wdrożyć?",
        );
        let out = rephrase(&q, &mock, &GenParams::default(), &PromptTemplates::default()).unwrap();
        assert!(!out.query_text.contains('\n'));
        assert!(out.query_text.contains("rozpoznanie zatorowości płucnej"));
        assert!(out.query_text.contains("leczenie przeciwkrzepliwe"));
    }

    #[test]
    fn citations_from_supplied_set() {
        let d = ten_docs();
        let refs: Vec<&CorpusDocument> = d.iter().collect();
        let c = generate_comment(
            &question("P"),
            &refs,
            &Fixed("Tak [doc:D1], oraz [doc:D3]; znowu [doc:D1]."),
            &GenParams::default(),
            &PromptTemplates::default(),
            &clock(),
        )
        .unwrap();
        assert_eq!(c.citations, ["D1", "D3"]);
        assert_eq!(c.provider_meta.model, "fixed");
        assert_eq!(c.provider_meta.timestamp, clock().0);
    }

    #[test]
    fn ghost_citation_rejected() {
        let d = ten_docs();
        let refs: Vec<&CorpusDocument> = d.iter().collect();
        let err = generate_comment(
            &question("P"),
            &refs,
            &Fixed("Według [doc:D2] i [doc:GHOST]."),
            &GenParams::default(),
            &PromptTemplates::default(),
            &clock(),
        )
        .unwrap_err();
        assert_eq!(err, GenError::Citation("GHOST".into()));
    }

    #[test]
    fn no_markers_is_valid() {
        let d = ten_docs();
        let refs: Vec<&CorpusDocument> = d.iter().collect();
        let c = generate_comment(
            &question("P"),
            &refs,
            &Fixed("Z ogólnej wiedzy medycznej."),
            &GenParams::default(),
            &PromptTemplates::default(),
            &clock(),
        )
        .unwrap();
        assert!(c.citations.is_empty());
    }

    #[test]
    fn mock_comment_cites_supplied_docs() {
        let d = ten_docs();
        let refs: Vec<&CorpusDocument> = d.iter().collect();
        let c = generate_comment(
            &question("P"),
            &refs,
            &MockProvider::new(analyzer()),
            &GenParams::default(),
            &PromptTemplates::default(),
            &clock(),
        )
        .unwrap();
        assert!(c.body.starts_with("Prawidłowa odpowiedź to B."));
        assert_eq!(c.citations, ["D1", "D2", "D3"]);
        assert!(c.body.contains("„Title of D1”"));
    }

    fn engine(matching: usize, others: usize) -> SearchEngine {
        let mut docs = Vec::new();
        for i in 0..matching {
            docs.push(doc(
                &format!("M{i:02}"),
                SourceKind::Guideline,
                "2021-06-01",
                &format!("zawał serca leczenie reperfuzyjne wariant {i} opis {}", "tekst ".repeat(i)),
            ));
        }
        for i in 0..others {
            docs.push(doc(&format!("O{i:02}"), SourceKind::Other, "2019-01-01", "dermatologia łuszczyca"));
        }
        SearchEngine::build(CorpusStore::from_documents(docs).unwrap(), analyzer().config().clone(), Execution::Sequential)
    }

    fn run(engine: &SearchEngine, q: &ExamQuestion) -> Result<QuestionReport, PipelineError> {
        let mock = MockProvider::new(analyzer());
        let scorer = LexicalOverlapScorer::new(analyzer());
        let templates = PromptTemplates::default();
        let clock = clock();
        Pipeline {
            engine,
            mode: RerankMode::refined(),
            scorer: &scorer,
            provider: &mock,
            params: GenParams::default(),
            templates: &templates,
            clock: &clock,
            rerank_options: RerankOptions::default(),
        }
        .run(q)
    }

    #[test]
    fn end_to_end_report_has_ten_docs() {
        let e = engine(14, 5);
        let q = question("Jakie jest leczenie w zawale serca?");
        let report = run(&e, &q).unwrap();
        assert_eq!(report.docs.len(), 10);
        let ids = report.doc_ids();
        assert!(report.comment.citations.iter().all(|c| ids.contains(&c.as_str())));
        assert!(!report.comment.citations.is_empty());
        assert!(ids.iter().all(|id| id.starts_with('M')));
    }

    #[test]
    fn too_few_matches_is_doc_count_error() {
        let e = engine(3, 20);
        let q = question("Jakie jest leczenie w zawale serca?");
        let err = run(&e, &q).unwrap_err();
        assert_eq!(err, PipelineError::DocCount { got: 3 });
        assert_eq!(err.stage(), "retrieve");
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let e = engine(12, 2);
        let q = question("Jakie jest leczenie w zawale serca?");
        let a = serde_json::to_string(&run(&e, &q).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&e, &q).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
