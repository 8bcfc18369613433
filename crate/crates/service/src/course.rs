use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use medcourse_core::corpus::SourceKind;
use medcourse_core::exam::{filter_questions, ExamFile, ExamQuestion};
use medcourse_core::genpipe::{GeneratedComment, QuestionReport, ReportDoc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source metadata a learner can follow from a comment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocRef {
    pub doc_id: String,
    pub title: String,
    pub source_kind: SourceKind,
    pub publication_date: NaiveDate,
    pub url_or_locator: String,
    pub snippet: String,
    pub paragraph: String,
}

impl From<&ReportDoc> for DocRef {
    fn from(d: &ReportDoc) -> Self {
        Self {
            doc_id: d.doc_id.clone(),
            title: d.title.clone(),
            source_kind: d.source_kind,
            publication_date: d.publication_date,
            url_or_locator: d.url_or_locator.clone(),
            snippet: d.snippet.clone(),
            paragraph: d.paragraph.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Course {
    pub course_id: String,
    pub specialty: String,
    pub session_years: Vec<String>,
    pub item_ids: Vec<String>,
    pub questions: BTreeMap<String, ExamQuestion>,
    pub comments: BTreeMap<String, GeneratedComment>,
    pub doc_refs: BTreeMap<String, DocRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("no report for questions: {}", .0.join(", "))]
    MissingReports(Vec<String>),
    #[error("comment for {question_id} cites {doc_id}, which is not among the course sources")]
    DanglingCitation { question_id: String, doc_id: String },
    #[error("question {0} appears more than once")]
    DuplicateItem(String),
    #[error("course has no items")]
    Empty,
}

impl Course {
    /// Checks that every item has a question and a comment and that every
    /// citation resolves.
    pub fn validate(&self) -> Result<(), BuildError> {
        if self.item_ids.is_empty() {
            return Err(BuildError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut missing = Vec::new();
        for id in &self.item_ids {
            if !seen.insert(id) {
                return Err(BuildError::DuplicateItem(id.clone()));
            }
            if !self.questions.contains_key(id) || !self.comments.contains_key(id) {
                missing.push(id.clone());
            }
        }
        if !missing.is_empty() {
            return Err(BuildError::MissingReports(missing));
        }
        for id in &self.item_ids {
            for c in &self.comments[id].citations {
                if !self.doc_refs.contains_key(c) {
                    return Err(BuildError::DanglingCitation {
                        question_id: id.clone(),
                        doc_id: c.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn question(&self, item_id: &str) -> Option<&ExamQuestion> {
        self.questions.get(item_id)
    }
}

/// Builds a course from filtered exam questions and their reports. Sources
/// are the documents the reports cite.
pub fn assemble_course(
    course_id: &str,
    exams: &[ExamFile],
    reports: &[QuestionReport],
) -> Result<Course, BuildError> {
    let by_id: BTreeMap<String, &QuestionReport> = reports.iter().map(|r| (r.question_id(), r)).collect();
    let mut course = Course {
        course_id: course_id.into(),
        specialty: String::new(),
        session_years: Vec::new(),
        item_ids: Vec::new(),
        questions: BTreeMap::new(),
        comments: BTreeMap::new(),
        doc_refs: BTreeMap::new(),
    };
    let mut specialties = BTreeSet::new();
    let mut missing = Vec::new();
    for exam in exams {
        specialties.insert(exam.specialty.clone());
        if !course.session_years.contains(&exam.session) {
            course.session_years.push(exam.session.clone());
        }
        for q in filter_questions(exam.clone()).kept {
            let id = q.id();
            let Some(report) = by_id.get(&id) else {
                missing.push(id);
                continue;
            };
            for c in &report.comment.citations {
                let doc = report.docs.iter().find(|d| &d.doc_id == c).ok_or_else(|| {
                    BuildError::DanglingCitation {
                        question_id: id.clone(),
                        doc_id: c.clone(),
                    }
                })?;
                course.doc_refs.entry(c.clone()).or_insert_with(|| doc.into());
            }
            if course.questions.insert(id.clone(), q).is_some() {
                return Err(BuildError::DuplicateItem(id));
            }
            course.comments.insert(id.clone(), report.comment.clone());
            course.item_ids.push(id);
        }
    }
    if !missing.is_empty() {
        return Err(BuildError::MissingReports(missing));
    }
    course.specialty = specialties.into_iter().collect::<Vec<_>>().join(", ");
    course.validate()?;
    Ok(course)
}
