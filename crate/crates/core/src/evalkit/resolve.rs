use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::agreement::{
    classify_optional_score_pair, classify_prioritization_pair, classify_relevance_pair,
};
use super::{
    AgreementClass, AnnotationError, AnnotationRecord, Assessment, FinalValues, Parameter,
    RelevanceLabel, DOCS_PER_REPORT,
};
use crate::genpipe::QuestionReport;

/// One rated field of a dual annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRef {
    Param(Parameter),
    Doc(usize),
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldRef::Param(p) => write!(f, "{p}"),
            FieldRef::Doc(i) => write!(f, "doc[{i}]"),
        }
    }
}

/// A third annotator's verdicts on the discrepant fields of one question.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Resolution {
    pub question_id: String,
    pub resolver_id: String,
    /// Scored parameters and prioritization.
    #[serde(default)]
    pub scores: BTreeMap<Parameter, Assessment>,
    /// Document index (report order) to label.
    #[serde(default)]
    pub doc_labels: BTreeMap<usize, RelevanceLabel>,
}

impl Resolution {
    pub fn new(question_id: impl Into<String>, resolver_id: impl Into<String>) -> Self {
        Self {
            question_id: question_id.into(),
            resolver_id: resolver_id.into(),
            ..Self::default()
        }
    }

    pub fn fields(&self) -> impl Iterator<Item = FieldRef> + '_ {
        self.scores
            .keys()
            .map(|&p| FieldRef::Param(p))
            .chain(self.doc_labels.keys().map(|&i| FieldRef::Doc(i)))
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<Self>, String> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolutionError {
    #[error("resolver {0:?} is one of the original annotators")]
    SelfResolve(String),
    #[error("field {0} is not in dispute")]
    NotInDispute(FieldRef),
    #[error("question {question_id}: discrepancies left unresolved: {}", fmt_fields(.fields))]
    Unresolved {
        question_id: String,
        fields: Vec<FieldRef>,
    },
    #[error("records disagree on question: {0}")]
    QuestionMismatch(String),
    #[error("same annotator {0:?} on both sides of the pair")]
    SameAnnotator(String),
    #[error("invalid value for {0}")]
    InvalidValue(FieldRef),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

fn fmt_fields(fields: &[FieldRef]) -> String {
    fields.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOutcome {
    pub class: AgreementClass,
    pub a: Option<Assessment>,
    pub b: Option<Assessment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_to: Option<Assessment>,
}

impl FieldOutcome {
    /// The value entering aggregation; `None` when excluded (not evaluated,
    /// abstained, or an unresolved discrepancy).
    pub fn final_value(&self) -> Option<f64> {
        let num = |x: Option<Assessment>| x.and_then(Assessment::score).map(|s| f64::from(s.value()));
        match self.class {
            AgreementClass::Tiaa => num(self.a),
            AgreementClass::Piaa => Some((num(self.a)? + num(self.b)?) / 2.0),
            AgreementClass::Discrepancy => num(self.resolved_to),
            AgreementClass::NotApplicable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocOutcome {
    pub class: AgreementClass,
    pub a: RelevanceLabel,
    pub b: RelevanceLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_to: Option<RelevanceLabel>,
}

impl DocOutcome {
    /// Label each side contributes after resolution.
    fn sides(&self) -> Option<(RelevanceLabel, RelevanceLabel)> {
        match (self.class, self.resolved_to) {
            (AgreementClass::Discrepancy, Some(r)) => Some((r, r)),
            (AgreementClass::Discrepancy, None) => None,
            _ => Some((self.a, self.b)),
        }
    }
}

/// The merged outcome of a dual annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRecord {
    pub question_id: String,
    pub annotators: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolver_id: Option<String>,
    pub fields: BTreeMap<Parameter, FieldOutcome>,
    pub docs: Vec<DocOutcome>,
    /// Fields whose value came from the resolver.
    pub resolved: Vec<FieldRef>,
    /// Discrepant fields with no verdict yet.
    pub unresolved: Vec<FieldRef>,
}

impl ResolvedRecord {
    pub fn class_of(&self, field: FieldRef) -> Option<AgreementClass> {
        match field {
            FieldRef::Param(p) => self.fields.get(&p).map(|f| f.class),
            FieldRef::Doc(i) => self.docs.get(i).map(|d| d.class),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// Per-parameter values for aggregation. Document counts are the
    /// mean of both sides' counts after resolution; they are omitted while
    /// any document discrepancy is unresolved.
    pub fn final_values(&self) -> FinalValues {
        let mut values = BTreeMap::new();
        for (&p, outcome) in &self.fields {
            if let Some(v) = outcome.final_value() {
                values.insert(p, v);
            }
        }
        let sides: Option<Vec<_>> = self.docs.iter().map(DocOutcome::sides).collect();
        if let Some(sides) = sides {
            let count = |label: RelevanceLabel| {
                let n = sides
                    .iter()
                    .map(|&(a, b)| usize::from(a == label) + usize::from(b == label))
                    .sum::<usize>();
                n as f64 / 2.0
            };
            let complete = count(RelevanceLabel::Complete);
            let partial = count(RelevanceLabel::Partial);
            values.insert(Parameter::CompletelyRelevant, complete);
            values.insert(Parameter::PartiallyRelevant, partial);
            values.insert(Parameter::TotalRelevant, complete + partial);
        }
        FinalValues {
            question_id: self.question_id.clone(),
            values,
        }
    }
}

/// Classifies every field of a dual annotation and applies whatever
/// verdicts `resolution` carries, leaving other discrepancies listed in
/// `unresolved`.
pub fn merge(
    a: &AnnotationRecord,
    b: &AnnotationRecord,
    resolution: Option<&Resolution>,
) -> Result<ResolvedRecord, ResolutionError> {
    a.validate()?;
    b.validate()?;
    if a.question_id != b.question_id {
        return Err(ResolutionError::QuestionMismatch(format!(
            "{} vs {}",
            a.question_id, b.question_id
        )));
    }
    if a.annotator_id == b.annotator_id {
        return Err(ResolutionError::SameAnnotator(a.annotator_id.clone()));
    }
    if let Some(r) = resolution {
        if r.resolver_id == a.annotator_id || r.resolver_id == b.annotator_id {
            return Err(ResolutionError::SelfResolve(r.resolver_id.clone()));
        }
        if r.question_id != a.question_id {
            return Err(ResolutionError::QuestionMismatch(format!(
                "resolution for {} applied to {}",
                r.question_id, a.question_id
            )));
        }
    }

    let mut fields = BTreeMap::new();
    for p in Parameter::SCORED {
        let (x, y) = (a.score(p), b.score(p));
        fields.insert(
            p,
            FieldOutcome {
                class: classify_optional_score_pair(x, y),
                a: x.map(Assessment::Scored),
                b: y.map(Assessment::Scored),
                resolved_to: None,
            },
        );
    }
    fields.insert(
        Parameter::Prioritization,
        FieldOutcome {
            class: classify_prioritization_pair(a.prioritization, b.prioritization),
            a: Some(a.prioritization),
            b: Some(b.prioritization),
            resolved_to: None,
        },
    );
    let mut docs: Vec<DocOutcome> = a
        .doc_labels
        .iter()
        .zip(&b.doc_labels)
        .map(|(&x, &y)| DocOutcome {
            class: classify_relevance_pair(x, y),
            a: x,
            b: y,
            resolved_to: None,
        })
        .collect();

    let mut resolved = Vec::new();
    if let Some(r) = resolution {
        for (&p, &value) in &r.scores {
            let field = FieldRef::Param(p);
            let outcome = fields.get_mut(&p).ok_or(ResolutionError::InvalidValue(field))?;
            if outcome.class != AgreementClass::Discrepancy {
                return Err(ResolutionError::NotInDispute(field));
            }
            if value == Assessment::Abstain && p != Parameter::Prioritization {
                return Err(ResolutionError::InvalidValue(field));
            }
            outcome.resolved_to = Some(value);
            resolved.push(field);
        }
        for (&i, &label) in &r.doc_labels {
            let field = FieldRef::Doc(i);
            let doc = docs.get_mut(i).ok_or(ResolutionError::InvalidValue(field))?;
            if doc.class != AgreementClass::Discrepancy {
                return Err(ResolutionError::NotInDispute(field));
            }
            doc.resolved_to = Some(label);
            resolved.push(field);
        }
    }

    let unresolved = fields
        .iter()
        .filter(|(_, o)| o.class == AgreementClass::Discrepancy && o.resolved_to.is_none())
        .map(|(&p, _)| FieldRef::Param(p))
        .chain(
            docs.iter()
                .enumerate()
                .filter(|(_, d)| d.class == AgreementClass::Discrepancy && d.resolved_to.is_none())
                .map(|(i, _)| FieldRef::Doc(i)),
        )
        .collect();

    Ok(ResolvedRecord {
        question_id: a.question_id.clone(),
        annotators: [a.annotator_id.clone(), b.annotator_id.clone()],
        resolver_id: resolution.map(|r| r.resolver_id.clone()),
        fields,
        docs,
        resolved,
        unresolved,
    })
}

/// Strict resolution: every discrepancy must receive a verdict from a
/// resolver other than the two annotators, and no verdict may touch a
/// field that was not in dispute.
pub fn resolve(
    report: Option<&QuestionReport>,
    a: &AnnotationRecord,
    b: &AnnotationRecord,
    resolution: &Resolution,
) -> Result<ResolvedRecord, ResolutionError> {
    if let Some(report) = report {
        let qid = report.question_id();
        if a.question_id != qid {
            return Err(ResolutionError::QuestionMismatch(format!(
                "report {qid} vs annotation {}",
                a.question_id
            )));
        }
        if report.docs.len() != DOCS_PER_REPORT {
            return Err(ResolutionError::QuestionMismatch(format!(
                "report {qid} has {} documents",
                report.docs.len()
            )));
        }
    }
    let out = merge(a, b, Some(resolution))?;
    if !out.unresolved.is_empty() {
        return Err(ResolutionError::Unresolved {
            question_id: out.question_id,
            fields: out.unresolved,
        });
    }
    Ok(out)
}
