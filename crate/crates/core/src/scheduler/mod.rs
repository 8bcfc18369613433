//! Spaced repetition: an exponential forgetting curve parameterized by
//! stability, threshold-driven due dates and three-level grading.

mod sim;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{as_days, days};

pub use sim::{simulate, Policy, TraceRow};

pub const DEFAULT_EASE: f64 = 2.5;
pub const MIN_EASE: f64 = 1.3;
/// Recall probability at elapsed == stability.
pub const CURVE_BASE: f64 = 0.9;
const FIRST_INTERVAL: f64 = 1.0;
const SECOND_INTERVAL: f64 = 6.0;
const UNSURE_GROWTH: f64 = 1.2;
const UNSURE_EASE_PENALTY: f64 = 0.15;
const FORGOT_EASE_PENALTY: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    DontKnow,
    Unsure,
    Know,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::DontKnow, Grade::Unsure, Grade::Know];
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grade::DontKnow => "dont_know",
            Grade::Unsure => "unsure",
            Grade::Know => "know",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown grade {0:?} (expected know, unsure or dont_know)")]
pub struct BadGrade(pub String);

impl FromStr for Grade {
    type Err = BadGrade;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '\''], "_").as_str() {
            "know" => Ok(Grade::Know),
            "unsure" => Ok(Grade::Unsure),
            "dont_know" | "dontknow" | "don_t_know" => Ok(Grade::DontKnow),
            _ => Err(BadGrade(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RetentionThreshold(f64);

impl RetentionThreshold {
    pub fn new(r: f64) -> Result<Self, DomainError> {
        if r > 0.0 && r < 1.0 {
            Ok(Self(r))
        } else {
            Err(DomainError::Threshold(r))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Multiplier from stability to interval: ln(r) / ln(0.9).
    pub fn interval_factor(self) -> f64 {
        self.0.ln() / CURVE_BASE.ln()
    }
}

impl Default for RetentionThreshold {
    fn default() -> Self {
        Self(0.9)
    }
}

impl TryFrom<f64> for RetentionThreshold {
    type Error = DomainError;

    fn try_from(r: f64) -> Result<Self, Self::Error> {
        Self::new(r)
    }
}

impl From<RetentionThreshold> for f64 {
    fn from(r: RetentionThreshold) -> f64 {
        r.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("elapsed time must be non-negative, got {0}")]
    NegativeElapsed(f64),
    #[error("stability must be positive, got {0}")]
    Stability(f64),
    #[error("retention threshold must lie in (0, 1), got {0}")]
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("review at {now} precedes last review at {last}")]
pub struct ClockError {
    pub now: DateTime<Utc>,
    pub last: DateTime<Utc>,
}

/// R = 0.9^(elapsed / stability).
pub fn retrievability(elapsed_days: f64, stability_days: f64) -> Result<f64, DomainError> {
    if !(elapsed_days >= 0.0) || !elapsed_days.is_finite() {
        return Err(DomainError::NegativeElapsed(elapsed_days));
    }
    if !(stability_days > 0.0) || !stability_days.is_finite() {
        return Err(DomainError::Stability(stability_days));
    }
    Ok(CURVE_BASE.powf(elapsed_days / stability_days))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewState {
    pub user_id: String,
    pub item_id: String,
    pub stability_days: f64,
    pub ease: f64,
    pub last_review: Option<DateTime<Utc>>,
    pub due: Option<DateTime<Utc>>,
    pub reps: u32,
    pub history: Vec<(DateTime<Utc>, Grade)>,
}

impl ReviewState {
    /// An item the learner has not seen yet.
    pub fn new(user_id: impl Into<String>, item_id: impl Into<String>) -> Self {
        Self {
            user_id: user_id.into(),
            item_id: item_id.into(),
            stability_days: FIRST_INTERVAL,
            ease: DEFAULT_EASE,
            last_review: None,
            due: None,
            reps: 0,
            history: Vec::new(),
        }
    }

    pub fn is_new(&self) -> bool {
        self.history.is_empty()
    }

    /// Recall probability at `now`; 1.0 before the first review.
    pub fn retrievability_at(&self, now: DateTime<Utc>) -> f64 {
        match self.last_review {
            Some(last) => {
                let elapsed = as_days(now - last).max(0.0);
                retrievability(elapsed, self.stability_days).unwrap_or(0.0)
            }
            None => 1.0,
        }
    }
}

/// last_review + stability · ln(r_target)/ln(0.9); `None` for unseen items.
pub fn next_due(state: &ReviewState, threshold: RetentionThreshold) -> Option<DateTime<Utc>> {
    state
        .last_review
        .map(|last| last + days(state.stability_days * threshold.interval_factor()))
}

/// New stability and ease for `grade`, ignoring timestamps.
fn update(stability: f64, ease: f64, reps: u32, grade: Grade) -> (f64, f64, u32) {
    let lowered = |p: f64| (ease - p).max(MIN_EASE);
    if grade == Grade::DontKnow {
        return (FIRST_INTERVAL, lowered(FORGOT_EASE_PENALTY), 0);
    }
    if reps == 0 {
        // Seed interval, whatever the passing grade.
        let ease = if grade == Grade::Unsure { lowered(UNSURE_EASE_PENALTY) } else { ease };
        return (FIRST_INTERVAL, ease, 1);
    }
    let unsure = (stability * UNSURE_GROWTH).max(FIRST_INTERVAL);
    match grade {
        Grade::Unsure => (unsure, lowered(UNSURE_EASE_PENALTY), reps + 1),
        _ => {
            let base = if reps == 1 { SECOND_INTERVAL } else { stability * ease };
            (base.max(unsure), ease, reps + 1)
        }
    }
}

pub fn apply_grade(
    state: &ReviewState,
    grade: Grade,
    now: DateTime<Utc>,
    threshold: RetentionThreshold,
) -> Result<ReviewState, ClockError> {
    if let Some(last) = state.last_review {
        if now < last {
            return Err(ClockError { now, last });
        }
    }
    let (stability_days, ease, reps) = update(state.stability_days, state.ease, state.reps, grade);
    let mut next = state.clone();
    next.stability_days = stability_days;
    next.ease = ease;
    next.reps = reps;
    next.last_review = Some(now);
    next.history.push((now, grade));
    next.due = next_due(&next, threshold);
    Ok(next)
}

/// Due items (due ≤ now) by due time then item id, followed by up to
/// `new_cap` unseen items in item id order.
pub fn due_queue(states: &[ReviewState], now: DateTime<Utc>, new_cap: usize) -> Vec<String> {
    let mut due: Vec<(&DateTime<Utc>, &str)> = states
        .iter()
        .filter_map(|s| s.due.as_ref().filter(|d| **d <= now).map(|d| (d, s.item_id.as_str())))
        .collect();
    due.sort();
    let mut fresh: Vec<&str> = states
        .iter()
        .filter(|s| s.is_new())
        .map(|s| s.item_id.as_str())
        .collect();
    fresh.sort_unstable();
    fresh.dedup();
    due.into_iter()
        .map(|(_, id)| id.to_string())
        .chain(fresh.into_iter().take(new_cap).map(String::from))
        .collect()
}

/// One recorded grade; the scheduler's state is a fold over these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeEvent {
    pub user_id: String,
    pub item_id: String,
    pub grade: Grade,
    pub at: DateTime<Utc>,
}

/// Review states keyed by (user, item).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReviewBook {
    pub threshold: RetentionThreshold,
    #[serde(with = "state_list")]
    pub states: BTreeMap<(String, String), ReviewState>,
}

mod state_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<(String, String), ReviewState>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(String, String), ReviewState>, D::Error> {
        let v = Vec::<ReviewState>::deserialize(d)?;
        Ok(v.into_iter()
            .map(|s| ((s.user_id.clone(), s.item_id.clone()), s))
            .collect())
    }
}

impl ReviewBook {
    pub fn new(threshold: RetentionThreshold) -> Self {
        Self {
            threshold,
            states: BTreeMap::new(),
        }
    }

    pub fn get(&self, user: &str, item: &str) -> Option<&ReviewState> {
        self.states.get(&(user.to_string(), item.to_string()))
    }

    pub fn apply(&mut self, ev: &GradeEvent) -> Result<&ReviewState, ClockError> {
        let key = (ev.user_id.clone(), ev.item_id.clone());
        let current = self
            .states
            .get(&key)
            .cloned()
            .unwrap_or_else(|| ReviewState::new(&ev.user_id, &ev.item_id));
        let next = apply_grade(&current, ev.grade, ev.at, self.threshold)?;
        self.states.insert(key.clone(), next);
        Ok(&self.states[&key])
    }

    pub fn replay<'a>(
        threshold: RetentionThreshold,
        events: impl IntoIterator<Item = &'a GradeEvent>,
    ) -> Result<Self, ClockError> {
        let mut book = Self::new(threshold);
        for ev in events {
            book.apply(ev)?;
        }
        Ok(book)
    }

    /// States of one user, in item order.
    pub fn user_states(&self, user: &str) -> Vec<&ReviewState> {
        self.states
            .iter()
            .filter(|((u, _), _)| u == user)
            .map(|(_, s)| s)
            .collect()
    }
}
