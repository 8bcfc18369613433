//! Paragraph-granular document store.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard upper bound on snippet length, in characters.
pub const SNIPPET_CAP: usize = 160;
/// Length [`make_snippet`] aims for.
pub const SNIPPET_TARGET: usize = 140;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Guideline,
    Textbook,
    JournalArticle,
    CaseReport,
    Other,
}

impl SourceKind {
    /// Lower is more authoritative. Guidelines and textbooks share a tier.
    pub fn tier(self) -> u8 {
        match self {
            SourceKind::Guideline | SourceKind::Textbook => 0,
            SourceKind::JournalArticle => 1,
            SourceKind::CaseReport => 2,
            SourceKind::Other => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub doc_id: String,
    pub title: String,
    pub source_kind: SourceKind,
    pub publication_date: NaiveDate,
    pub paragraph: String,
    pub snippet: String,
    pub url_or_locator: String,
}

impl CorpusDocument {
    fn check_snippet(&self) -> Result<(), String> {
        let n = self.snippet.chars().count();
        if n > SNIPPET_CAP {
            return Err(format!("snippet is {n} characters (cap {SNIPPET_CAP})"));
        }
        let snippet = normalize_ws(&self.snippet);
        if !normalize_ws(&self.paragraph).contains(&snippet) {
            return Err("snippet is not an extract of the paragraph".into());
        }
        Ok(())
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// First words of `paragraph`, cut at a word boundary near
/// [`SNIPPET_TARGET`] characters and never above [`SNIPPET_CAP`].
pub fn make_snippet(paragraph: &str) -> String {
    let mut out = String::new();
    let mut len = 0;
    for word in paragraph.split_whitespace() {
        let w = word.chars().count();
        let extra = if out.is_empty() { w } else { w + 1 };
        if len + extra > SNIPPET_TARGET {
            if out.is_empty() {
                out = word.chars().take(SNIPPET_TARGET).collect();
            }
            break;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
        len += extra;
    }
    out
}

/// Authority order: source tier, then newer publication, then doc id.
/// `Less` means `a` ranks ahead of `b`.
pub fn compare_sources(a: &CorpusDocument, b: &CorpusDocument) -> Ordering {
    a.source_kind
        .tier()
        .cmp(&b.source_kind.tier())
        .then_with(|| b.publication_date.cmp(&a.publication_date))
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate doc_id {0:?}")]
    DuplicateId(String),
    #[error("line {line_no}: {message}")]
    Parse { line_no: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable once built; lookups by id are O(1) and iteration follows
/// insertion order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "Vec<CorpusDocument>", into = "Vec<CorpusDocument>")]
pub struct CorpusStore {
    docs: Vec<CorpusDocument>,
    by_id: HashMap<String, usize>,
}

impl From<Vec<CorpusDocument>> for CorpusStore {
    fn from(docs: Vec<CorpusDocument>) -> Self {
        let by_id = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i))
            .collect();
        Self { docs, by_id }
    }
}

impl From<CorpusStore> for Vec<CorpusDocument> {
    fn from(s: CorpusStore) -> Self {
        s.docs
    }
}

impl CorpusStore {
    pub fn from_documents(docs: Vec<CorpusDocument>) -> Result<Self, CorpusError> {
        let mut store = CorpusStore::default();
        for d in docs {
            store.push(d)?;
        }
        Ok(store)
    }

    fn push(&mut self, doc: CorpusDocument) -> Result<(), CorpusError> {
        if self.by_id.contains_key(&doc.doc_id) {
            return Err(CorpusError::DuplicateId(doc.doc_id));
        }
        self.by_id.insert(doc.doc_id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    /// Parses the line-delimited corpus format. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut store = CorpusStore::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let doc: CorpusDocument =
                serde_json::from_str(trimmed).map_err(|e| CorpusError::Parse {
                    line_no,
                    message: e.to_string(),
                })?;
            doc.check_snippet()
                .map_err(|message| CorpusError::Parse { line_no, message })?;
            store.push(doc)?;
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&CorpusDocument> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CorpusDocument> {
        self.docs.iter()
    }

    pub fn documents(&self) -> &[CorpusDocument] {
        &self.docs
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.docs {
            out.push_str(&serde_json::to_string(d).expect("document serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusStore, CorpusError> {
    CorpusStore::parse(&std::fs::read_to_string(path)?)
}


#[cfg(test)]
mod tests {
    use super::test_support::doc;
    use super::*;
    use proptest::prelude::*;

    fn line(id: &str) -> String {
        serde_json::to_string(&doc(id, SourceKind::Textbook, "2021-03-01", "Zawał serca to martwica mięśnia sercowego.")).unwrap()
    }

    #[test]
    fn loads_three_lines_in_order() {
        let text = format!("# sample\n{}\n\n{}\n{}\n", line("d1"), line("d2"), line("d3"));
        let store = CorpusStore::parse(&text).unwrap();
        assert_eq!(store.len(), 3);
        let ids: Vec<_> = store.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2", "d3"]);
        assert_eq!(store.get("d2").unwrap().doc_id, "d2");
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = format!("{}\n{}\n", line("d1"), line("d1"));
        assert!(matches!(
            CorpusStore::parse(&text),
            Err(CorpusError::DuplicateId(id)) if id == "d1"
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{}\n# c\n{{not json\n", line("d1"));
        assert!(matches!(
            CorpusStore::parse(&text),
            Err(CorpusError::Parse { line_no: 3, .. })
        ));
    }

    #[test]
    fn empty_file_is_empty_store() {
        assert!(CorpusStore::parse("").unwrap().is_empty());
    }

    #[test]
    fn snippet_must_come_from_paragraph() {
        let mut d = doc("d1", SourceKind::Other, "2020-01-01", "alpha beta gamma");
        d.snippet = "delta".into();
        let text = serde_json::to_string(&d).unwrap();
        assert!(matches!(
            CorpusStore::parse(&text),
            Err(CorpusError::Parse { line_no: 1, .. })
        ));
    }

    #[test]
    fn snippet_cap_enforced() {
        let para = "x".repeat(400);
        let mut d = doc("d1", SourceKind::Other, "2020-01-01", &para);
        d.snippet = "x".repeat(161);
        assert!(CorpusStore::parse(&serde_json::to_string(&d).unwrap()).is_err());
        d.snippet = "x".repeat(160);
        assert!(CorpusStore::parse(&serde_json::to_string(&d).unwrap()).is_ok());
    }

    #[test]
    fn make_snippet_stays_within_target() {
        let para = "Niewydolność serca ".repeat(60);
        let s = make_snippet(&para);
        assert!(s.chars().count() <= SNIPPET_TARGET);
        assert!(s.chars().count() > 100);
        assert!(para.starts_with(&s));
        assert_eq!(make_snippet("krótki"), "krótki");
    }

    #[test]
    fn guideline_beats_newer_case_report() {
        let g = doc("g", SourceKind::Guideline, "2020-01-01", "a");
        let c = doc("c", SourceKind::CaseReport, "2024-01-01", "a");
        assert_eq!(compare_sources(&g, &c), Ordering::Less);
        assert_eq!(compare_sources(&c, &g), Ordering::Greater);
    }

    #[test]
    fn newer_textbook_first() {
        let old = doc("a", SourceKind::Textbook, "2018-01-01", "a");
        let new = doc("b", SourceKind::Textbook, "2022-01-01", "a");
        assert_eq!(compare_sources(&new, &old), Ordering::Less);
    }

    #[test]
    fn guideline_and_textbook_share_tier() {
        let g = doc("g", SourceKind::Guideline, "2019-01-01", "a");
        let t = doc("t", SourceKind::Textbook, "2021-01-01", "a");
        assert_eq!(compare_sources(&t, &g), Ordering::Less);
    }

    #[test]
    fn tie_broken_by_id() {
        let a = doc("a", SourceKind::JournalArticle, "2021-01-01", "a");
        let b = doc("b", SourceKind::JournalArticle, "2021-01-01", "a");
        assert_eq!(compare_sources(&a, &b), Ordering::Less);
        assert_eq!(compare_sources(&a, &a), Ordering::Equal);
    }

    fn arb_doc() -> impl Strategy<Value = CorpusDocument> {
        let kinds = prop::sample::select(vec![
            SourceKind::Guideline,
            SourceKind::Textbook,
            SourceKind::JournalArticle,
            SourceKind::CaseReport,
            SourceKind::Other,
        ]);
        (kinds, 0i64..20, "[a-d]{1,2}").prop_map(|(k, day, id)| {
            let date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(day * 90);
            doc(&id, k, &date.to_string(), "p")
        })
    }

    proptest! {
        #[test]
        fn compare_is_a_total_order(a in arb_doc(), b in arb_doc(), c in arb_doc()) {
            prop_assert_eq!(compare_sources(&a, &b), compare_sources(&b, &a).reverse());
            if compare_sources(&a, &b) != Ordering::Greater && compare_sources(&b, &c) != Ordering::Greater {
                prop_assert_ne!(compare_sources(&a, &c), Ordering::Greater);
            }
            if compare_sources(&a, &b) == Ordering::Equal {
                prop_assert_eq!(&a.doc_id, &b.doc_id);
            }
        }
    }
}
