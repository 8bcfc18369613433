//! Human evaluation framework: annotation records over twelve parameters,
//! pairwise agreement classes, third-annotator resolution, and mean ± std
//! reporting with agreement percentages.

mod aggregate;
mod agreement;
mod iaa;
mod render;
mod resolve;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aggregate::{aggregate, AggregateError, AggregateRow, AggregateTable, FinalValues};
pub use agreement::{
    classify_optional_score_pair, classify_prioritization_pair, classify_relevance_pair,
    classify_score_pair,
};
pub use iaa::{iaa_summary, pair_annotations, pairs_from_records, IaaCounts, IaaError, IaaSummary};
pub use render::{render_results_table, render_validation_table};
pub use resolve::{
    merge, resolve, DocOutcome, FieldOutcome, FieldRef, Resolution, ResolutionError,
    ResolvedRecord,
};

/// Documents each annotator labels per question.
pub const DOCS_PER_REPORT: usize = 10;

/// A rating on the forced-choice 1–4 scale (no neutral midpoint).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Score(u8);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("score must be 1..=4, got {0}")]
pub struct ScoreRangeError(pub u8);

impl Score {
    pub fn new(v: u8) -> Result<Self, ScoreRangeError> {
        if (1..=4).contains(&v) {
            Ok(Self(v))
        } else {
            Err(ScoreRangeError(v))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// True for 3 and 4.
    pub fn is_positive(self) -> bool {
        self.0 >= 3
    }

    pub fn all() -> [Score; 4] {
        [Score(1), Score(2), Score(3), Score(4)]
    }
}

impl TryFrom<u8> for Score {
    type Error = ScoreRangeError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Score::new(v)
    }
}

impl From<Score> for u8 {
    fn from(s: Score) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceLabel {
    Complete,
    Partial,
    Irrelevant,
}

impl RelevanceLabel {
    pub const ALL: [RelevanceLabel; 3] = [
        RelevanceLabel::Complete,
        RelevanceLabel::Partial,
        RelevanceLabel::Irrelevant,
    ];
}

/// A score, or a declared abstention (prioritization only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAssessment", into = "RawAssessment")]
pub enum Assessment {
    Scored(Score),
    Abstain,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawAssessment {
    Number(u8),
    Word(String),
}

impl TryFrom<RawAssessment> for Assessment {
    type Error = String;

    fn try_from(raw: RawAssessment) -> Result<Self, Self::Error> {
        match raw {
            RawAssessment::Number(n) => Score::new(n).map(Assessment::Scored).map_err(|e| e.to_string()),
            RawAssessment::Word(w) if w.eq_ignore_ascii_case("abstain") => Ok(Assessment::Abstain),
            RawAssessment::Word(w) => Err(format!("expected 1..=4 or \"abstain\", got {w:?}")),
        }
    }
}

impl From<Assessment> for RawAssessment {
    fn from(a: Assessment) -> Self {
        match a {
            Assessment::Scored(s) => RawAssessment::Number(s.value()),
            Assessment::Abstain => RawAssessment::Word("abstain".into()),
        }
    }
}

impl Assessment {
    pub fn score(self) -> Option<Score> {
        match self {
            Assessment::Scored(s) => Some(s),
            Assessment::Abstain => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgreementClass {
    #[serde(rename = "TIAA")]
    Tiaa,
    #[serde(rename = "PIAA")]
    Piaa,
    Discrepancy,
    NotApplicable,
}

/// The evaluation parameters, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Sensitivity,
    Specificity,
    CompletelyRelevant,
    PartiallyRelevant,
    TotalRelevant,
    Credibility,
    Accuracy,
    Logic,
    CompletenessDepth,
    Conciseness,
    Communicativeness,
    Prioritization,
}

impl Parameter {
    pub const ALL: [Parameter; 12] = [
        Parameter::Sensitivity,
        Parameter::Specificity,
        Parameter::CompletelyRelevant,
        Parameter::PartiallyRelevant,
        Parameter::TotalRelevant,
        Parameter::Credibility,
        Parameter::Accuracy,
        Parameter::Logic,
        Parameter::CompletenessDepth,
        Parameter::Conciseness,
        Parameter::Communicativeness,
        Parameter::Prioritization,
    ];

    /// Parameters rated on the 1–4 scale (prioritization excluded: it may
    /// be abstained).
    pub const SCORED: [Parameter; 8] = [
        Parameter::Sensitivity,
        Parameter::Specificity,
        Parameter::Credibility,
        Parameter::Accuracy,
        Parameter::Logic,
        Parameter::CompletenessDepth,
        Parameter::Conciseness,
        Parameter::Communicativeness,
    ];

    pub fn is_doc_count(self) -> bool {
        matches!(
            self,
            Parameter::CompletelyRelevant | Parameter::PartiallyRelevant | Parameter::TotalRelevant
        )
    }

    /// Row label in the development results layout.
    pub fn label(self) -> &'static str {
        match self {
            Parameter::Sensitivity => "Sensitivity (1–4)",
            Parameter::Specificity => "Specificity (1–4)",
            Parameter::CompletelyRelevant => "Completely relevant docs (/10)",
            Parameter::PartiallyRelevant => "Partially relevant docs (/10)",
            Parameter::TotalRelevant => "Total relevant docs (/10)",
            Parameter::Credibility => "Credibility (1–4)",
            Parameter::Accuracy => "Accuracy (1–4)",
            Parameter::Logic => "Logic (1–4)",
            Parameter::CompletenessDepth => "Completeness/Depth (1–4)",
            Parameter::Conciseness => "Conciseness (1–4)",
            Parameter::Communicativeness => "Communicativeness/Readability (1–4)",
            Parameter::Prioritization => "Prioritization (1–4)",
        }
    }

    /// Row label in the validation (agreement) layout.
    pub fn validation_label(self) -> &'static str {
        match self {
            Parameter::TotalRelevant => "Relevant docs (/10)",
            other => other.label(),
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

/// One annotator's assessment of one question report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub question_id: String,
    pub annotator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<Score>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specificity: Option<Score>,
    /// One label per report document, in report order.
    pub doc_labels: Vec<RelevanceLabel>,
    pub credibility: Score,
    pub accuracy: Score,
    pub logic: Score,
    pub completeness_depth: Score,
    pub conciseness: Score,
    pub communicativeness: Score,
    pub prioritization: Assessment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("{question_id}/{annotator_id}: expected {DOCS_PER_REPORT} document labels, got {got}")]
    DocLabels {
        question_id: String,
        annotator_id: String,
        got: usize,
    },
    #[error("annotation is missing question_id or annotator_id")]
    MissingKey,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), AnnotationError> {
        if self.question_id.trim().is_empty() || self.annotator_id.trim().is_empty() {
            return Err(AnnotationError::MissingKey);
        }
        if self.doc_labels.len() != DOCS_PER_REPORT {
            return Err(AnnotationError::DocLabels {
                question_id: self.question_id.clone(),
                annotator_id: self.annotator_id.clone(),
                got: self.doc_labels.len(),
            });
        }
        Ok(())
    }

    fn count(&self, label: RelevanceLabel) -> usize {
        self.doc_labels.iter().filter(|&&l| l == label).count()
    }

    pub fn complete_count(&self) -> usize {
        self.count(RelevanceLabel::Complete)
    }

    pub fn partial_count(&self) -> usize {
        self.count(RelevanceLabel::Partial)
    }

    pub fn total_relevant(&self) -> usize {
        self.complete_count() + self.partial_count()
    }

    /// The 1–4 rating for a scored parameter; `None` for sensitivity or
    /// specificity when not evaluated, and for non-scored parameters.
    pub fn score(&self, p: Parameter) -> Option<Score> {
        match p {
            Parameter::Sensitivity => self.sensitivity,
            Parameter::Specificity => self.specificity,
            Parameter::Credibility => Some(self.credibility),
            Parameter::Accuracy => Some(self.accuracy),
            Parameter::Logic => Some(self.logic),
            Parameter::CompletenessDepth => Some(self.completeness_depth),
            Parameter::Conciseness => Some(self.conciseness),
            Parameter::Communicativeness => Some(self.communicativeness),
            Parameter::Prioritization => self.prioritization.score(),
            _ => None,
        }
    }

    /// Parses line-delimited annotation records; blank lines skipped.
    pub fn parse_jsonl(text: &str) -> Result<Vec<Self>, String> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: AnnotationRecord =
                serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            rec.validate().map_err(|e| format!("line {}: {e}", i + 1))?;
            out.push(rec);
        }
        Ok(out)
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn s(v: u8) -> Score {
        Score::new(v).unwrap()
    }

    pub fn record(qid: &str, who: &str, v: u8) -> AnnotationRecord {
        AnnotationRecord {
            question_id: qid.into(),
            annotator_id: who.into(),
            sensitivity: None,
            specificity: None,
            doc_labels: vec![RelevanceLabel::Complete; DOCS_PER_REPORT],
            credibility: s(v),
            accuracy: s(v),
            logic: s(v),
            completeness_depth: s(v),
            conciseness: s(v),
            communicativeness: s(v),
            prioritization: Assessment::Scored(s(v)),
        }
    }
}
