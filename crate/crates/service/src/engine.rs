use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use medcourse_core::evalkit::{
    aggregate, iaa_summary, merge, pairs_from_records, render_validation_table, AgreementClass,
    AnnotationRecord, FinalValues, Parameter,
};
use medcourse_core::exam::{Choice, Letter};
use medcourse_core::genpipe::QuestionReport;
use medcourse_core::scheduler::{
    apply_grade, due_queue, ClockError, Grade, RetentionThreshold, ReviewBook, ReviewState,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::course::{Course, DocRef};
use crate::events::{EventKind, SessionEvent};

/// Where an episode for one (user, item) stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Idle,
    Shown,
    Answered,
    Revealed,
}

impl Phase {
    /// The only legal successor of each phase.
    fn step(self, kind: &EventKind) -> Option<Phase> {
        match (self, kind) {
            (Phase::Idle, EventKind::Shown) => Some(Phase::Shown),
            (Phase::Shown, EventKind::Answered { .. }) => Some(Phase::Answered),
            (Phase::Answered, EventKind::Revealed) => Some(Phase::Revealed),
            (Phase::Revealed, EventKind::Graded { .. }) => Some(Phase::Idle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("{event} not allowed for {user_id}/{item_id} while {phase:?}")]
    OutOfOrder {
        user_id: String,
        item_id: String,
        phase: Phase,
        event: &'static str,
    },
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error(transparent)]
    Clock(#[from] ClockError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationIntakeError {
    #[error("no report for question {0}")]
    UnknownReport(String),
    #[error("{0}")]
    Invalid(String),
}

/// What a learner sees before answering. Carries no answer key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPayload {
    pub course_id: String,
    pub item_id: String,
    pub specialty: String,
    pub session: String,
    pub stem: String,
    pub choices: Vec<Choice>,
    pub is_new: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealPayload {
    pub item_id: String,
    pub chosen: Letter,
    pub correct: Letter,
    pub is_correct: bool,
    pub comment: String,
    pub sources: Vec<DocRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeOutcome {
    pub item_id: String,
    pub grade: Grade,
    pub due: DateTime<Utc>,
    pub stability_days: f64,
    pub reps: u32,
}

/// Replayable learner state: review states, open episodes and the daily
/// count of newly introduced items.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearnerState {
    pub book: ReviewBook,
    #[serde(with = "pair_keyed")]
    pub episodes: BTreeMap<(String, String), Phase>,
    #[serde(with = "pair_keyed")]
    pub new_per_day: BTreeMap<(String, NaiveDate), usize>,
    pub events_applied: u64,
}

mod pair_keyed {
    use std::collections::BTreeMap;

    use serde::de::DeserializeOwned;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<A: Serialize, B: Serialize, V: Serialize, S: Serializer>(
        m: &BTreeMap<(A, B), V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|((a, b), v)| (a, b, v)))
    }

    pub fn deserialize<'de, A, B, V, D>(d: D) -> Result<BTreeMap<(A, B), V>, D::Error>
    where
        A: DeserializeOwned + Ord,
        B: DeserializeOwned + Ord,
        V: DeserializeOwned,
        D: Deserializer<'de>,
    {
        let v = Vec::<(A, B, V)>::deserialize(d)?;
        Ok(v.into_iter().map(|(a, b, v)| ((a, b), v)).collect())
    }
}

/// Courses, reports, learner sessions and annotations. Synchronous and
/// clock-free: every operation takes `now` and returns the events it
/// produced, which the caller persists.
pub struct SessionEngine {
    courses: BTreeMap<String, Course>,
    item_course: BTreeMap<String, String>,
    reports: BTreeMap<String, QuestionReport>,
    annotations: BTreeMap<(String, String), AnnotationRecord>,
    daily_new_cap: usize,
    state: LearnerState,
}

impl SessionEngine {
    pub fn new(
        courses: Vec<Course>,
        reports: Vec<QuestionReport>,
        threshold: RetentionThreshold,
        daily_new_cap: usize,
    ) -> Self {
        let mut item_course = BTreeMap::new();
        for c in &courses {
            for item in &c.item_ids {
                if let Some(prev) = item_course.insert(item.clone(), c.course_id.clone()) {
                    log::warn!("item {item} in both {prev} and {}; using the latter", c.course_id);
                }
            }
        }
        Self {
            courses: courses.into_iter().map(|c| (c.course_id.clone(), c)).collect(),
            item_course,
            reports: reports.into_iter().map(|r| (r.question_id(), r)).collect(),
            annotations: BTreeMap::new(),
            daily_new_cap,
            state: LearnerState {
                book: ReviewBook::new(threshold),
                ..LearnerState::default()
            },
        }
    }

    pub fn courses(&self) -> impl Iterator<Item = &Course> {
        self.courses.values()
    }

    pub fn course(&self, id: &str) -> Option<&Course> {
        self.courses.get(id)
    }

    pub fn report(&self, question_id: &str) -> Option<&QuestionReport> {
        self.reports.get(question_id)
    }

    pub fn report_ids(&self) -> impl Iterator<Item = &String> {
        self.reports.keys()
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    /// Replaces learner state wholesale (snapshot restore).
    pub fn restore(&mut self, state: LearnerState) {
        let threshold = self.state.book.threshold;
        self.state = state;
        self.state.book.threshold = threshold;
    }

    pub fn phase(&self, user: &str, item: &str) -> Phase {
        self.state
            .episodes
            .get(&(user.to_string(), item.to_string()))
            .copied()
            .unwrap_or_default()
    }

    fn course_of(&self, item: &str) -> Result<&Course, SessionError> {
        self.item_course
            .get(item)
            .and_then(|c| self.courses.get(c))
            .ok_or_else(|| SessionError::UnknownItem(item.into()))
    }

    fn review_state(&self, user: &str, item: &str) -> ReviewState {
        self.state
            .book
            .get(user, item)
            .cloned()
            .unwrap_or_else(|| ReviewState::new(user, item))
    }

    /// Checks a batch of events against the state machine without applying it.
    pub fn check(&self, events: &[SessionEvent]) -> Result<(), SessionError> {
        let mut phases: BTreeMap<(&str, &str), Phase> = BTreeMap::new();
        for ev in events {
            self.course_of(&ev.item_id)?;
            let key = (ev.user_id.as_str(), ev.item_id.as_str());
            let phase = *phases
                .entry(key)
                .or_insert_with(|| self.phase(&ev.user_id, &ev.item_id));
            let next = phase.step(&ev.kind).ok_or_else(|| SessionError::OutOfOrder {
                user_id: ev.user_id.clone(),
                item_id: ev.item_id.clone(),
                phase,
                event: ev.kind.name(),
            })?;
            if let EventKind::Graded { grade } = ev.kind {
                apply_grade(&self.review_state(&ev.user_id, &ev.item_id), grade, ev.at, self.state.book.threshold)?;
            }
            phases.insert(key, next);
        }
        Ok(())
    }

    /// Applies one event; used both live and for log replay.
    pub fn apply(&mut self, ev: &SessionEvent) -> Result<(), SessionError> {
        self.check(std::slice::from_ref(ev))?;
        let key = (ev.user_id.clone(), ev.item_id.clone());
        let phase = self.phase(&ev.user_id, &ev.item_id);
        let next = phase.step(&ev.kind).expect("checked");
        match ev.kind {
            EventKind::Shown => {
                if self.review_state(&ev.user_id, &ev.item_id).is_new() {
                    *self
                        .state
                        .new_per_day
                        .entry((ev.user_id.clone(), ev.at.date_naive()))
                        .or_default() += 1;
                }
            }
            EventKind::Graded { grade } => {
                self.state.book.apply(&medcourse_core::scheduler::GradeEvent {
                    user_id: ev.user_id.clone(),
                    item_id: ev.item_id.clone(),
                    grade,
                    at: ev.at,
                })?;
            }
            _ => {}
        }
        if next == Phase::Idle {
            self.state.episodes.remove(&key);
        } else {
            self.state.episodes.insert(key, next);
        }
        self.state.events_applied += 1;
        Ok(())
    }

    pub fn apply_all(&mut self, events: &[SessionEvent]) -> Result<(), SessionError> {
        events.iter().try_for_each(|e| self.apply(e))
    }

    fn payload(&self, item: &str, is_new: bool) -> Result<ItemPayload, SessionError> {
        let course = self.course_of(item)?;
        let q = course.question(item).ok_or_else(|| SessionError::UnknownItem(item.into()))?;
        Ok(ItemPayload {
            course_id: course.course_id.clone(),
            item_id: item.into(),
            specialty: q.specialty.clone(),
            session: q.session.clone(),
            stem: q.stem.clone(),
            choices: q.choices.clone(),
            is_new,
        })
    }

    /// Items of every course, in the order a learner meets them.
    pub fn queue(&self, user: &str, now: DateTime<Utc>) -> Vec<String> {
        let introduced = self
            .state
            .new_per_day
            .get(&(user.to_string(), now.date_naive()))
            .copied()
            .unwrap_or(0);
        let states: Vec<ReviewState> = self
            .item_course
            .keys()
            .filter(|item| self.phase(user, item) == Phase::Idle)
            .map(|item| self.review_state(user, item))
            .collect();
        due_queue(&states, now, self.daily_new_cap.saturating_sub(introduced))
    }

    /// The next item to study, or `None` when nothing is due and the daily
    /// allowance of new items is spent. An item already shown but not yet
    /// answered is served again.
    pub fn next(&self, user: &str, now: DateTime<Utc>) -> Result<Option<(ItemPayload, Vec<SessionEvent>)>, SessionError> {
        let open = self
            .state
            .episodes
            .iter()
            .find(|((u, _), p)| u == user && **p == Phase::Shown)
            .map(|((_, i), _)| i.clone());
        if let Some(item) = open {
            let is_new = self.review_state(user, &item).is_new();
            return Ok(Some((self.payload(&item, is_new)?, Vec::new())));
        }
        let Some(item) = self.queue(user, now).into_iter().next() else {
            return Ok(None);
        };
        let is_new = self.review_state(user, &item).is_new();
        let ev = SessionEvent {
            user_id: user.into(),
            item_id: item.clone(),
            kind: EventKind::Shown,
            at: now,
        };
        self.check(std::slice::from_ref(&ev))?;
        Ok(Some((self.payload(&item, is_new)?, vec![ev])))
    }

    /// Validates an answer and returns the reveal together with the
    /// Answered and Revealed events. The reveal does not depend on whether
    /// the answer was right.
    pub fn answer(
        &self,
        user: &str,
        item: &str,
        letter: Letter,
        now: DateTime<Utc>,
    ) -> Result<(RevealPayload, Vec<SessionEvent>), SessionError> {
        let mk = |kind| SessionEvent {
            user_id: user.into(),
            item_id: item.into(),
            kind,
            at: now,
        };
        let events = vec![mk(EventKind::Answered { letter }), mk(EventKind::Revealed)];
        self.check(&events)?;
        let course = self.course_of(item)?;
        let q = course.question(item).ok_or_else(|| SessionError::UnknownItem(item.into()))?;
        let comment = course.comments.get(item).ok_or_else(|| SessionError::UnknownItem(item.into()))?;
        let reveal = RevealPayload {
            item_id: item.into(),
            chosen: letter,
            correct: q.correct,
            is_correct: letter == q.correct,
            comment: comment.body.clone(),
            sources: comment
                .citations
                .iter()
                .filter_map(|c| course.doc_refs.get(c).cloned())
                .collect(),
        };
        Ok((reveal, events))
    }

    pub fn grade(
        &self,
        user: &str,
        item: &str,
        grade: Grade,
        now: DateTime<Utc>,
    ) -> Result<(GradeOutcome, Vec<SessionEvent>), SessionError> {
        let ev = SessionEvent {
            user_id: user.into(),
            item_id: item.into(),
            kind: EventKind::Graded { grade },
            at: now,
        };
        self.check(std::slice::from_ref(&ev))?;
        let next = apply_grade(&self.review_state(user, item), grade, now, self.state.book.threshold)?;
        Ok((
            GradeOutcome {
                item_id: item.into(),
                grade,
                due: next.due.expect("graded state has a due date"),
                stability_days: next.stability_days,
                reps: next.reps,
            },
            vec![ev],
        ))
    }

    /// Checks an annotation against its report.
    pub fn check_annotation(
        &self,
        question_id: &str,
        record: &AnnotationRecord,
    ) -> Result<(), AnnotationIntakeError> {
        let report = self
            .reports
            .get(question_id)
            .ok_or_else(|| AnnotationIntakeError::UnknownReport(question_id.into()))?;
        if record.question_id != question_id {
            return Err(AnnotationIntakeError::Invalid(format!(
                "record is for {}, posted to {question_id}",
                record.question_id
            )));
        }
        record.validate().map_err(|e| AnnotationIntakeError::Invalid(e.to_string()))?;
        if record.doc_labels.len() != report.docs.len() {
            return Err(AnnotationIntakeError::Invalid(format!(
                "report has {} documents, got {} labels",
                report.docs.len(),
                record.doc_labels.len()
            )));
        }
        Ok(())
    }

    /// Stores a checked annotation, replacing any earlier record from the
    /// same annotator for that question.
    pub fn store_annotation(&mut self, record: AnnotationRecord) {
        self.annotations
            .insert((record.question_id.clone(), record.annotator_id.clone()), record);
    }

    pub fn annotations(&self) -> impl Iterator<Item = &AnnotationRecord> {
        self.annotations.values()
    }

    /// Agreement over questions that have exactly two annotators.
    pub fn iaa_view(&self) -> IaaView {
        let mut by_q: BTreeMap<&str, Vec<AnnotationRecord>> = BTreeMap::new();
        for ((q, _), r) in &self.annotations {
            by_q.entry(q).or_default().push(r.clone());
        }
        let mut paired = Vec::new();
        let mut skipped = Vec::new();
        for (q, recs) in by_q {
            if recs.len() == 2 {
                paired.extend(recs);
            } else {
                skipped.push(q.to_string());
            }
        }
        let pairs = pairs_from_records(&paired).unwrap_or_default();
        let summary = iaa_summary(&pairs).unwrap_or_default();
        let finals: Vec<FinalValues> = pairs
            .iter()
            .filter_map(|(a, b)| merge(a, b, None).ok())
            .map(|r| r.final_values())
            .collect();
        let table = aggregate(&finals)
            .map(|agg| render_validation_table(&agg, &summary))
            .unwrap_or_default();
        let parameters = Parameter::ALL
            .iter()
            .filter_map(|p| summary.get(*p).map(|c| (*p, c)))
            .filter(|(_, c)| c.total() > 0)
            .map(|(p, c)| IaaRow {
                parameter: p,
                label: p.validation_label().into(),
                tiaa: c.tiaa,
                piaa: c.piaa,
                discrepancy: c.discrepancy,
                tiaa_pct: c.fraction(AgreementClass::Tiaa).unwrap_or(0.0) * 100.0,
                piaa_pct: c.fraction(AgreementClass::Piaa).unwrap_or(0.0) * 100.0,
            })
            .collect();
        IaaView {
            pairs: pairs.len(),
            skipped,
            parameters,
            table,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaRow {
    pub parameter: Parameter,
    pub label: String,
    pub tiaa: usize,
    pub piaa: usize,
    pub discrepancy: usize,
    pub tiaa_pct: f64,
    pub piaa_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaView {
    pub pairs: usize,
    /// Questions with other than two annotators.
    pub skipped: Vec<String>,
    pub parameters: Vec<IaaRow>,
    /// Markdown table with provisional scores (discrepancies unresolved).
    pub table: String,
}
