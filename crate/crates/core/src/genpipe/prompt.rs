use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GenError;
use crate::corpus::CorpusDocument;
use crate::exam::ExamQuestion;

/// Number of documents every comment prompt carries.
pub const PROMPT_DOCS: usize = 10;

const REPHRASE_V1: &str = include_str!("../../templates/rephrase.v1.txt");
const COMMENT_V1: &str = include_str!("../../templates/comment.v1.txt");

/// The two prompt templates, kept as data so they can be revised without a
/// rebuild. Placeholders: `{{stem}}`, `{{choices}}`, `{{correct}}` and, in
/// the comment template, `{{documents}}`, in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub version: String,
    pub rephrase: String,
    pub comment: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            version: "v1".into(),
            rephrase: REPHRASE_V1.into(),
            comment: COMMENT_V1.into(),
        }
    }
}

const REPHRASE_SLOTS: &[&str] = &["stem", "choices", "correct"];
const COMMENT_SLOTS: &[&str] = &["stem", "choices", "correct", "documents"];

impl PromptTemplates {
    pub fn new(version: impl Into<String>, rephrase: String, comment: String) -> Result<Self, GenError> {
        check_slots("rephrase", &rephrase, REPHRASE_SLOTS)?;
        check_slots("comment", &comment, COMMENT_SLOTS)?;
        Ok(Self {
            version: version.into(),
            rephrase,
            comment,
        })
    }

    /// Reads `rephrase.<version>.txt` and `comment.<version>.txt` from `dir`.
    pub fn load(dir: impl AsRef<Path>, version: &str) -> Result<Self, GenError> {
        let read = |name: &str| {
            let path = dir.as_ref().join(format!("{name}.{version}.txt"));
            std::fs::read_to_string(&path)
                .map_err(|e| GenError::Template(format!("{}: {e}", path.display())))
        };
        Self::new(version, read("rephrase")?, read("comment")?)
    }

    pub fn render_rephrase(&self, q: &ExamQuestion) -> String {
        let choices = choices_block(q);
        let correct = q.correct.to_string();
        fill(&self.rephrase, &[("stem", &q.stem), ("choices", &choices), ("correct", &correct)])
    }

    pub fn render_comment(&self, q: &ExamQuestion, docs: &[&CorpusDocument]) -> Result<String, GenError> {
        if docs.len() != PROMPT_DOCS {
            return Err(GenError::DocCount { got: docs.len() });
        }
        let choices = choices_block(q);
        let correct = q.correct.to_string();
        let documents = documents_block(docs);
        Ok(fill(
            &self.comment,
            &[
                ("stem", &q.stem),
                ("choices", &choices),
                ("correct", &correct),
                ("documents", &documents),
            ],
        ))
    }
}

fn check_slots(name: &str, template: &str, slots: &[&str]) -> Result<(), GenError> {
    let mut last = 0;
    for slot in slots {
        let tag = format!("{{{{{slot}}}}}");
        let at = template
            .find(&tag)
            .ok_or_else(|| GenError::Template(format!("{name} template lacks {tag}")))?;
        if at < last {
            return Err(GenError::Template(format!("{name} template: {tag} out of order")));
        }
        last = at;
    }
    Ok(())
}

/// Single-pass placeholder substitution; substituted text is never rescanned.
fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 1024);
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let key = &after[..end];
                match values.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => out.push_str(&rest[start..start + 2 + end + 2]),
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn choices_block(q: &ExamQuestion) -> String {
    q.choices
        .iter()
        .map(|c| format!("{}. {}", c.letter, c.text))
        .collect::<Vec<_>>()
        .join("\n")
}

fn documents_block(docs: &[&CorpusDocument]) -> String {
    docs.iter()
        .map(|d| {
            format!(
                "[doc:{}] {} ({}, {})\n{}",
                d.doc_id,
                d.title,
                serde_json::to_value(d.source_kind)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                d.publication_date,
                d.paragraph
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::doc;
    use crate::corpus::SourceKind;
    use crate::exam::Letter;

    fn question() -> ExamQuestion {
        let mut q = crate::exam::test_support::question(3);
        q.correct = Letter::D;
        q
    }

    fn docs(n: usize) -> Vec<CorpusDocument> {
        (0..n)
            .map(|i| doc(&format!("D{i}"), SourceKind::Guideline, "2023-01-01", &format!("akapit {i}")))
            .collect()
    }

    #[test]
    fn ten_docs_each_tagged_once() {
        let d = docs(10);
        let refs: Vec<&CorpusDocument> = d.iter().collect();
        let p = PromptTemplates::default().render_comment(&question(), &refs).unwrap();
        for doc in &d {
            assert_eq!(p.matches(&format!("[doc:{}]", doc.doc_id)).count(), 1, "{}", doc.doc_id);
        }
    }

    #[test]
    fn nine_docs_rejected() {
        let d = docs(9);
        let refs: Vec<&CorpusDocument> = d.iter().collect();
        assert_eq!(
            PromptTemplates::default().render_comment(&question(), &refs),
            Err(GenError::DocCount { got: 9 })
        );
    }

    #[test]
    fn sections_in_fixed_order() {
        let d = docs(10);
        let refs: Vec<&CorpusDocument> = d.iter().collect();
        let q = question();
        let p = PromptTemplates::default().render_comment(&q, &refs).unwrap();
        let stem = p.find(&q.stem).unwrap();
        let a = p.find("A. odpowiedź A").unwrap();
        let e = p.find("E. odpowiedź E").unwrap();
        let correct = p.find("CORRECT ANSWER: D\n").unwrap();
        let first_doc = p.find("[doc:D0]").unwrap();
        assert!(p.find("### task: comment").unwrap() < stem);
        assert!(stem < a && a < e && e < correct && correct < first_doc);
        assert!(p.contains("general medical knowledge"));
    }

    #[test]
    fn rephrase_prompt_has_stem_choices_and_key() {
        let q = question();
        let p = PromptTemplates::default().render_rephrase(&q);
        assert!(p.contains(&q.stem));
        for c in &q.choices {
            assert!(p.contains(&format!("{}. {}", c.letter, c.text)));
        }
        assert!(p.contains("CORRECT ANSWER: D"));
    }

    #[test]
    fn placeholder_text_in_content_is_not_expanded() {
        let out = fill("{{a}}-{{b}}", &[("a", "{{b}}"), ("b", "x")]);
        assert_eq!(out, "{{b}}-x");
    }

    #[test]
    fn templates_validated() {
        assert!(PromptTemplates::new("t", "{{stem}}{{choices}}{{correct}}".into(), "{{stem}}".into()).is_err());
        assert!(PromptTemplates::new(
            "t",
            "{{choices}}{{stem}}{{correct}}".into(),
            "{{stem}}{{choices}}{{correct}}{{documents}}".into()
        )
        .is_err());
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("rephrase.v9.txt"), "{{stem}} {{choices}} {{correct}}").unwrap();
        std::fs::write(dir.path().join("comment.v9.txt"), "{{stem}} {{choices}} {{correct}} {{documents}}").unwrap();
        let t = PromptTemplates::load(dir.path(), "v9").unwrap();
        assert_eq!(t.version, "v9");
    }
}
