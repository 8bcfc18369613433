#![allow(dead_code)]

use chrono::NaiveDate;
use medcourse_core::corpus::{make_snippet, CorpusDocument, CorpusStore, SourceKind};
use medcourse_core::exam::{Choice, ExamQuestion, Letter};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn doc(id: &str, paragraph: &str) -> CorpusDocument {
    CorpusDocument {
        doc_id: id.into(),
        title: format!("Title {id}"),
        source_kind: SourceKind::Textbook,
        publication_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        paragraph: paragraph.into(),
        snippet: make_snippet(paragraph),
        url_or_locator: format!("loc:{id}"),
    }
}

pub fn vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i}")).collect()
}

/// Random paragraphs over a small vocabulary; ids sort numerically.
pub fn random_corpus(rng: &mut impl Rng, n_docs: usize, vocab: &[String], max_len: usize) -> CorpusStore {
    let docs = (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..=max_len);
            let words: Vec<&str> = (0..len).map(|_| vocab.choose(rng).unwrap().as_str()).collect();
            doc(&format!("d{i:04}"), &words.join(" "))
        })
        .collect();
    CorpusStore::from_documents(docs).unwrap()
}

pub fn question(exam_id: &str, no: u32, stem: &str) -> ExamQuestion {
    ExamQuestion {
        exam_id: exam_id.into(),
        question_no: no,
        stem: stem.into(),
        choices: Letter::ALL
            .iter()
            .map(|&l| Choice {
                letter: l,
                text: format!("odpowiedź {l} numer {no}"),
            })
            .collect(),
        correct: Letter::ALL[no as usize % 5],
        has_image: false,
        invalidated: false,
        specialty: "Interna".into(),
        session: "2024".into(),
    }
}

/// Questions whose stems draw from `vocab`, so each retrieves plenty of documents.
pub fn random_questions(rng: &mut impl Rng, n: u32, vocab: &[String]) -> Vec<ExamQuestion> {
    (1..=n)
        .map(|no| {
            let words: Vec<&str> = (0..6).map(|_| vocab.choose(rng).unwrap().as_str()).collect();
            question("SYN", no, &format!("Pytanie {}?", words.join(" ")))
        })
        .collect()
}
