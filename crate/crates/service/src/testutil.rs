//! Hand-built exams and reports for tests and demos.

use chrono::{NaiveDate, TimeZone, Utc};
use medcourse_core::corpus::SourceKind;
use medcourse_core::exam::{Choice, ExamFile, ExamQuestion, Letter};
use medcourse_core::genpipe::{GenParams, GeneratedComment, ProviderMeta, QuestionReport, ReportDoc, SearchQuery};
use medcourse_core::rerank::RerankMode;

pub fn exam_of(exam_id: &str, n: u32) -> ExamFile {
    let questions = (1..=n)
        .map(|no| ExamQuestion {
            exam_id: exam_id.into(),
            question_no: no,
            stem: format!("Pytanie {no}: co jest leczeniem z wyboru?"),
            choices: Letter::ALL
                .iter()
                .map(|&letter| Choice {
                    letter,
                    text: format!("odpowiedź {letter}{no}"),
                })
                .collect(),
            correct: Letter::ALL[(no as usize * 3) % 5],
            has_image: false,
            invalidated: false,
            specialty: "Kardiologia".into(),
            session: "Jesień 2024".into(),
        })
        .collect();
    ExamFile {
        exam_id: exam_id.into(),
        specialty: "Kardiologia".into(),
        session: "Jesień 2024".into(),
        questions,
    }
}

/// A ten-document report whose comment cites the first two documents.
pub fn report_for(q: &ExamQuestion) -> QuestionReport {
    let id = q.id();
    let docs: Vec<ReportDoc> = (0..10)
        .map(|i| ReportDoc {
            doc_id: format!("{id}-d{i}"),
            title: format!("Źródło {i} dla {id}"),
            source_kind: SourceKind::Guideline,
            publication_date: NaiveDate::from_ymd_opt(2022, 5, 1).unwrap(),
            url_or_locator: format!("book:{id}:{i}"),
            snippet: format!("fragment {i}"),
            paragraph: format!("fragment {i} pełnego akapitu"),
            first_stage_score: 10.0 - i as f64,
            rerank_score: 1.0 - i as f64 / 10.0,
        })
        .collect();
    let body = format!(
        "Prawidłowa odpowiedź to {}. Uzasadnienie [doc:{}] oraz [doc:{}].",
        q.correct, docs[0].doc_id, docs[1].doc_id
    );
    QuestionReport {
        question: q.clone(),
        query: SearchQuery {
            question_id: id.clone(),
            query_text: "leczenie z wyboru".into(),
            difficulties: vec![],
        },
        rerank_mode: RerankMode::refined(),
        comment: GeneratedComment {
            question_id: id,
            citations: vec![docs[0].doc_id.clone(), docs[1].doc_id.clone()],
            body,
            provider_meta: ProviderMeta {
                model: "mock".into(),
                params: GenParams::default(),
                template_version: "v1".into(),
                timestamp: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
            },
        },
        docs,
    }
}
