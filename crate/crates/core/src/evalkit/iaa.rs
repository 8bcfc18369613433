use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::agreement::{
    classify_optional_score_pair, classify_prioritization_pair, classify_relevance_pair,
};
use super::{AgreementClass, AnnotationError, AnnotationRecord, Parameter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IaaCounts {
    pub tiaa: usize,
    pub piaa: usize,
    pub discrepancy: usize,
    pub not_applicable: usize,
}

impl IaaCounts {
    pub fn add(&mut self, class: AgreementClass) {
        match class {
            AgreementClass::Tiaa => self.tiaa += 1,
            AgreementClass::Piaa => self.piaa += 1,
            AgreementClass::Discrepancy => self.discrepancy += 1,
            AgreementClass::NotApplicable => self.not_applicable += 1,
        }
    }

    /// Classified comparisons; not-applicable ones are left out.
    pub fn total(&self) -> usize {
        self.tiaa + self.piaa + self.discrepancy
    }

    /// Exact share of `class` among classified comparisons.
    pub fn fraction(&self, class: AgreementClass) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let n = match class {
            AgreementClass::Tiaa => self.tiaa,
            AgreementClass::Piaa => self.piaa,
            AgreementClass::Discrepancy => self.discrepancy,
            AgreementClass::NotApplicable => return None,
        };
        Some(n as f64 / total as f64)
    }

    /// Whole-percent display, e.g. "57%".
    pub fn percent(&self, class: AgreementClass) -> String {
        match self.fraction(class) {
            Some(f) => format!("{}%", (f * 100.0).round() as i64),
            None => "n/a".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IaaSummary {
    pub pairs: usize,
    /// Relevance is counted per document under `TotalRelevant`.
    pub counts: BTreeMap<Parameter, IaaCounts>,
}

impl IaaSummary {
    pub fn get(&self, p: Parameter) -> Option<&IaaCounts> {
        self.counts.get(&p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IaaError {
    #[error("question sets differ: only in first {only_a:?}, only in second {only_b:?}")]
    QuestionSets {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },
    #[error("question {question_id}: expected two annotators, found {found}")]
    AnnotatorCount { question_id: String, found: usize },
    #[error("question {0}: duplicate record from one annotator")]
    Duplicate(String),
    #[error("pair for {0} compares an annotator with themself")]
    SameAnnotator(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

/// Pairs two annotators' record sets by question id. The sets must cover
/// the same questions.
pub fn pair_annotations(
    a: &[AnnotationRecord],
    b: &[AnnotationRecord],
) -> Result<Vec<(AnnotationRecord, AnnotationRecord)>, IaaError> {
    let index = |recs: &[AnnotationRecord]| -> Result<BTreeMap<String, AnnotationRecord>, IaaError> {
        let mut m = BTreeMap::new();
        for r in recs {
            r.validate()?;
            if m.insert(r.question_id.clone(), r.clone()).is_some() {
                return Err(IaaError::Duplicate(r.question_id.clone()));
            }
        }
        Ok(m)
    };
    let (ma, mut mb) = (index(a)?, index(b)?);
    let ka: BTreeSet<_> = ma.keys().cloned().collect();
    let kb: BTreeSet<_> = mb.keys().cloned().collect();
    if ka != kb {
        return Err(IaaError::QuestionSets {
            only_a: ka.difference(&kb).cloned().collect(),
            only_b: kb.difference(&ka).cloned().collect(),
        });
    }
    Ok(ma
        .into_iter()
        .map(|(q, ra)| {
            let rb = mb.remove(&q).expect("key sets equal");
            (ra, rb)
        })
        .collect())
}

/// Groups a mixed record list by question; every question must carry
/// records from exactly two distinct annotators.
pub fn pairs_from_records(
    records: &[AnnotationRecord],
) -> Result<Vec<(AnnotationRecord, AnnotationRecord)>, IaaError> {
    let mut by_q: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        by_q.entry(&r.question_id).or_default().push(r);
    }
    by_q.into_iter()
        .map(|(q, mut rs)| {
            if rs.len() != 2 {
                return Err(IaaError::AnnotatorCount {
                    question_id: q.into(),
                    found: rs.len(),
                });
            }
            rs.sort_by(|x, y| x.annotator_id.cmp(&y.annotator_id));
            if rs[0].annotator_id == rs[1].annotator_id {
                return Err(IaaError::Duplicate(q.into()));
            }
            Ok((rs[0].clone(), rs[1].clone()))
        })
        .collect()
}

pub fn iaa_summary(pairs: &[(AnnotationRecord, AnnotationRecord)]) -> Result<IaaSummary, IaaError> {
    let mut counts: BTreeMap<Parameter, IaaCounts> = BTreeMap::new();
    for (a, b) in pairs {
        a.validate()?;
        b.validate()?;
        if a.question_id != b.question_id {
            return Err(IaaError::QuestionSets {
                only_a: vec![a.question_id.clone()],
                only_b: vec![b.question_id.clone()],
            });
        }
        if a.annotator_id == b.annotator_id {
            return Err(IaaError::SameAnnotator(a.question_id.clone()));
        }
        for p in super::Parameter::SCORED {
            counts
                .entry(p)
                .or_default()
                .add(classify_optional_score_pair(a.score(p), b.score(p)));
        }
        counts
            .entry(Parameter::Prioritization)
            .or_default()
            .add(classify_prioritization_pair(a.prioritization, b.prioritization));
        let docs = counts.entry(Parameter::TotalRelevant).or_default();
        for (&x, &y) in a.doc_labels.iter().zip(&b.doc_labels) {
            docs.add(classify_relevance_pair(x, y));
        }
    }
    Ok(IaaSummary {
        pairs: pairs.len(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::test_support::{record, s};
    use crate::evalkit::RelevanceLabel;

    #[test]
    fn logic_fixture_sixty_twenty() {
        // 6 identical, 2 same-side, 2 across the boundary.
        let logic_pairs = [(4, 4), (3, 3), (4, 4), (2, 2), (1, 1), (3, 3), (3, 4), (1, 2), (2, 3), (4, 1)];
        let pairs: Vec<_> = logic_pairs
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                let q = format!("q{i}");
                let mut a = record(&q, "ann-a", 3);
                let mut b = record(&q, "ann-b", 3);
                a.logic = s(x);
                b.logic = s(y);
                (a, b)
            })
            .collect();
        let sum = iaa_summary(&pairs).unwrap();
        let logic = sum.get(Parameter::Logic).unwrap();
        assert_eq!((logic.tiaa, logic.piaa, logic.discrepancy), (6, 2, 2));
        assert_eq!(logic.percent(AgreementClass::Tiaa), "60%");
        assert_eq!(logic.percent(AgreementClass::Piaa), "20%");
        assert_eq!(logic.fraction(AgreementClass::Discrepancy), Some(0.2));
    }

    #[test]
    fn identical_annotations_full_agreement() {
        let pairs: Vec<_> = (0..5)
            .map(|i| (record(&format!("q{i}"), "a", 2), record(&format!("q{i}"), "b", 2)))
            .collect();
        let sum = iaa_summary(&pairs).unwrap();
        for (p, c) in &sum.counts {
            if matches!(p, Parameter::Sensitivity | Parameter::Specificity) {
                assert_eq!(c.total(), 0);
                assert_eq!(c.percent(AgreementClass::Tiaa), "n/a");
            } else {
                assert_eq!(c.percent(AgreementClass::Tiaa), "100%", "{p}");
            }
        }
        assert_eq!(sum.get(Parameter::TotalRelevant).unwrap().total(), 50);
    }

    #[test]
    fn relevance_counted_per_document() {
        let mut a = record("q", "a", 3);
        let b = record("q", "b", 3);
        a.doc_labels[0] = RelevanceLabel::Partial;
        a.doc_labels[1] = RelevanceLabel::Irrelevant;
        let sum = iaa_summary(&[(a, b)]).unwrap();
        let c = sum.get(Parameter::TotalRelevant).unwrap();
        assert_eq!((c.tiaa, c.piaa, c.discrepancy), (8, 1, 1));
    }

    #[test]
    fn mismatched_sets() {
        let a = vec![record("q1", "a", 3), record("q2", "a", 3)];
        let b = vec![record("q1", "b", 3), record("q3", "b", 3)];
        let err = pair_annotations(&a, &b).unwrap_err();
        assert_eq!(
            err,
            IaaError::QuestionSets {
                only_a: vec!["q2".into()],
                only_b: vec!["q3".into()]
            }
        );
        assert_eq!(pair_annotations(&a, &a.clone()).unwrap().len(), 2);
    }

    #[test]
    fn grouping_requires_two() {
        let recs = vec![record("q1", "b", 3), record("q1", "a", 3), record("q2", "a", 3)];
        assert!(matches!(
            pairs_from_records(&recs),
            Err(IaaError::AnnotatorCount { found: 1, .. })
        ));
        let pairs = pairs_from_records(&recs[..2]).unwrap();
        assert_eq!(pairs[0].0.annotator_id, "a");
    }
}
