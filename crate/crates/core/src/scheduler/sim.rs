use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, TimeZone, Utc};
use serde::Serialize;

use super::{apply_grade, Grade, RetentionThreshold, ReviewState};
use crate::clock::{as_days, days};

/// Grades a virtual learner gives, cycled in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub name: String,
    pub grades: Vec<Grade>,
}

impl Policy {
    pub fn constant(g: Grade) -> Self {
        Self {
            name: g.to_string(),
            grades: vec![g],
        }
    }

    pub fn mixed() -> Self {
        Self {
            name: "mixed".into(),
            grades: vec![Grade::Know, Grade::Unsure, Grade::Know, Grade::DontKnow],
        }
    }

    fn grade(&self, n: usize) -> Grade {
        self.grades[n % self.grades.len()]
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("mixed") {
            return Ok(Self::mixed());
        }
        if s.contains(',') {
            let grades = s
                .split(',')
                .map(|g| g.parse::<Grade>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(Self {
                name: s.into(),
                grades,
            });
        }
        s.parse::<Grade>().map(Self::constant).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub day: u32,
    pub grade: Grade,
    /// Recall probability just before the review.
    pub retrievability: f64,
    pub interval_days: f64,
    pub ease: f64,
    pub reps: u32,
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{:.4}\t{}\t{:.2}\t{}",
            self.day,
            self.grade,
            self.retrievability,
            fmt_days(self.interval_days),
            self.ease,
            self.reps
        )
    }
}

fn fmt_days(d: f64) -> String {
    let s = format!("{d:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn day_start(day: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap() + days(f64::from(day - 1))
}

/// Replays a single item over days 1..=`days_total`. The item is first
/// shown on day 1 and reviewed on any later day it has fallen due.
pub fn simulate(policy: &Policy, days_total: u32, threshold: RetentionThreshold) -> Vec<TraceRow> {
    assert!(!policy.grades.is_empty(), "policy needs at least one grade");
    let mut st = ReviewState::new("sim", "item");
    let mut trace = Vec::new();
    for day in 1..=days_total {
        let now = day_start(day);
        if st.due.is_some_and(|d| d > now) {
            continue;
        }
        let grade = policy.grade(trace.len());
        let retrievability = st.retrievability_at(now);
        st = apply_grade(&st, grade, now, threshold).expect("simulated time moves forward");
        trace.push(TraceRow {
            day,
            grade,
            retrievability,
            interval_days: as_days(st.due.expect("reviewed") - now),
            ease: st.ease,
            reps: st.reps,
        });
    }
    trace
}
