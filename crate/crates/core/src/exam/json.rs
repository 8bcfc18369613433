use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use super::{Choice, ExamFile, ExamQuestion, IngestError, Letter};

#[derive(Deserialize, Serialize)]
struct RawExam {
    exam_id: String,
    #[serde(default)]
    specialty: String,
    #[serde(default)]
    session: String,
    questions: Vec<RawQuestion>,
}

#[derive(Deserialize, Serialize)]
struct RawQuestion {
    test_no: u32,
    question: String,
    answers: AnswerEntries,
    correct: String,
    #[serde(default)]
    has_image: bool,
    #[serde(default)]
    invalidated: bool,
}

/// The `answers` object, kept as written so duplicate keys stay visible.
struct AnswerEntries(Vec<(String, String)>);

impl<'de> Deserialize<'de> for AnswerEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = AnswerEntries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping answer letters to text")
            }

            fn visit_map<M: MapAccess<'de>>(self, mut map: M) -> Result<Self::Value, M::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    out.push((k, v));
                }
                Ok(AnswerEntries(out))
            }
        }

        d.deserialize_map(EntriesVisitor)
    }
}

impl Serialize for AnswerEntries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn to_question(raw: RawQuestion, exam: &RawExam) -> Result<ExamQuestion, IngestError> {
    let no = raw.test_no;
    let schema = |reason: String| IngestError::Schema {
        question_no: no,
        reason,
    };
    let mut slots: [Option<String>; 5] = Default::default();
    for (key, text) in raw.answers.0 {
        let letter: Letter = key
            .parse()
            .map_err(|_| schema(format!("unknown answer key {key:?}")))?;
        let slot = &mut slots[letter as usize];
        if slot.is_some() {
            return Err(schema(format!("duplicate answer {letter}")));
        }
        *slot = Some(text);
    }
    let mut choices = Vec::with_capacity(5);
    for (letter, text) in Letter::ALL.into_iter().zip(slots) {
        let text = text.ok_or_else(|| schema(format!("missing answer {letter}")))?;
        choices.push(Choice { letter, text });
    }
    let correct: Letter = raw
        .correct
        .parse()
        .map_err(|_| schema(format!("correct answer {:?} is not A..E", raw.correct)))?;
    Ok(ExamQuestion {
        exam_id: exam.exam_id.clone(),
        question_no: no,
        stem: raw.question,
        choices,
        correct,
        has_image: raw.has_image,
        invalidated: raw.invalidated,
        specialty: exam.specialty.clone(),
        session: exam.session.clone(),
    })
}

/// Parses the OCR-style exam JSON. No filtering happens here.
pub fn parse_exam_json(bytes: &[u8]) -> Result<ExamFile, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::Parse {
        offset: e.valid_up_to(),
        message: "input is not valid UTF-8".into(),
    })?;
    let mut raw: RawExam = serde_json::from_str(text).map_err(|e| IngestError::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let questions = std::mem::take(&mut raw.questions);
    let file = ExamFile {
        questions: questions
            .into_iter()
            .map(|q| to_question(q, &raw))
            .collect::<Result<_, _>>()?,
        exam_id: raw.exam_id,
        specialty: raw.specialty,
        session: raw.session,
    };
    file.validate()?;
    Ok(file)
}

/// Writes the canonical exam JSON that [`parse_exam_json`] reads.
pub fn render_exam_json(exam: &ExamFile) -> String {
    let raw = RawExam {
        exam_id: exam.exam_id.clone(),
        specialty: exam.specialty.clone(),
        session: exam.session.clone(),
        questions: exam
            .questions
            .iter()
            .map(|q| RawQuestion {
                test_no: q.question_no,
                question: q.stem.clone(),
                answers: AnswerEntries(
                    q.choices
                        .iter()
                        .map(|c| (c.letter.to_string(), c.text.clone()))
                        .collect(),
                ),
                correct: q.correct.to_string(),
                has_image: q.has_image,
                invalidated: q.invalidated,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("exam serializes")
}
