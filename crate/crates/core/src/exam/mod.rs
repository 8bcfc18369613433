//! Exam ingestion: two source formats (OCR JSON and the quiz markup) parsed
//! into canonical [`ExamFile`]s, plus the content filter.

mod filter;
mod json;
mod quiz;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{filter_questions, DropReason, FilterOutcome};
pub use json::{parse_exam_json, render_exam_json};
pub use quiz::{parse_exam_quiz_html, render_exam_quiz_html};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
    C,
    D,
    E,
}

impl Letter {
    pub const ALL: [Letter; 5] = [Letter::A, Letter::B, Letter::C, Letter::D, Letter::E];

    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'A',
            Letter::B => 'B',
            Letter::C => 'C',
            Letter::D => 'D',
            Letter::E => 'E',
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not an answer letter: {0:?}")]
pub struct BadLetter(pub String);

impl FromStr for Letter {
    type Err = BadLetter;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(Letter::A),
            "B" | "b" => Ok(Letter::B),
            "C" | "c" => Ok(Letter::C),
            "D" | "d" => Ok(Letter::D),
            "E" | "e" => Ok(Letter::E),
            other => Err(BadLetter(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub letter: Letter,
    pub text: String,
}

/// One single-best-answer exam item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamQuestion {
    pub exam_id: String,
    pub question_no: u32,
    pub stem: String,
    /// Always five, lettered A..E in order.
    pub choices: Vec<Choice>,
    pub correct: Letter,
    pub has_image: bool,
    pub invalidated: bool,
    pub specialty: String,
    pub session: String,
}

impl ExamQuestion {
    /// Stable identifier used for reports, courses and scheduling.
    pub fn id(&self) -> String {
        question_id(&self.exam_id, self.question_no)
    }

    pub fn choice(&self, letter: Letter) -> Option<&str> {
        self.choices
            .iter()
            .find(|c| c.letter == letter)
            .map(|c| c.text.as_str())
    }

    pub fn correct_text(&self) -> &str {
        self.choice(self.correct).unwrap_or_default()
    }

    /// Stem followed by all answer texts; the raw material a search query
    /// is condensed from.
    pub fn full_text(&self) -> String {
        let mut s = self.stem.clone();
        for c in &self.choices {
            s.push('\n');
            s.push(c.letter.as_char());
            s.push_str(". ");
            s.push_str(&c.text);
        }
        s
    }

    fn validate(&self) -> Result<(), IngestError> {
        let letters: Vec<Letter> = self.choices.iter().map(|c| c.letter).collect();
        if letters != Letter::ALL {
            return Err(IngestError::Schema {
                question_no: self.question_no,
                reason: format!("expected choices A..E in order, found {letters:?}"),
            });
        }
        Ok(())
    }
}

pub fn question_id(exam_id: &str, question_no: u32) -> String {
    format!("{exam_id}-q{question_no:03}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamFile {
    pub exam_id: String,
    pub specialty: String,
    pub session: String,
    pub questions: Vec<ExamQuestion>,
}

impl ExamFile {
    /// Checks the file-level invariants shared by both parsers.
    fn validate(&self) -> Result<(), IngestError> {
        if self.exam_id.trim().is_empty() {
            return Err(IngestError::MissingField("exam_id"));
        }
        if self.questions.is_empty() {
            return Err(IngestError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for q in &self.questions {
            if q.question_no == 0 {
                return Err(IngestError::Schema {
                    question_no: 0,
                    reason: "question numbers start at 1".into(),
                });
            }
            if !seen.insert(q.question_no) {
                return Err(IngestError::Schema {
                    question_no: q.question_no,
                    reason: "duplicate question number".into(),
                });
            }
            q.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("question {question_no}: {reason}")]
    Schema { question_no: u32, reason: String },
    #[error("answer key has {key_rows} rows but the exam has {questions} questions")]
    KeyMismatch { key_rows: usize, questions: usize },
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("exam contains no questions")]
    Empty,
}

impl IngestError {
    pub fn question_no(&self) -> Option<u32> {
        match self {
            IngestError::Schema { question_no, .. } => Some(*question_no),
            _ => None,
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn question(no: u32) -> ExamQuestion {
        ExamQuestion {
            exam_id: "INT-2024J".into(),
            question_no: no,
            stem: format!("Pytanie {no}: które leczenie & <dawka> jest \"właściwe\"?"),
            choices: Letter::ALL
                .iter()
                .map(|&l| Choice {
                    letter: l,
                    text: format!("odpowiedź {l} do {no}"),
                })
                .collect(),
            correct: Letter::ALL[(no as usize) % 5],
            has_image: no % 7 == 0,
            invalidated: no % 11 == 0,
            specialty: "Choroby wewnętrzne".into(),
            session: "Spring 2024".into(),
        }
    }

    pub fn exam(n: u32) -> ExamFile {
        ExamFile {
            exam_id: "INT-2024J".into(),
            specialty: "Choroby wewnętrzne".into(),
            session: "Spring 2024".into(),
            questions: (1..=n).map(question).collect(),
        }
    }
}
