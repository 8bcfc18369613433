use serde::{Deserialize, Serialize};

use super::{ExamFile, ExamQuestion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Image,
    Invalidated,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilterOutcome {
    pub kept: Vec<ExamQuestion>,
    pub dropped: Vec<(ExamQuestion, DropReason)>,
}

/// Drops items with visual content, then items no longer consistent with
/// current knowledge. The image rule is checked first.
pub fn filter_questions(exam: ExamFile) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for q in exam.questions {
        if q.has_image {
            out.dropped.push((q, DropReason::Image));
        } else if q.invalidated {
            out.dropped.push((q, DropReason::Invalidated));
        } else {
            out.kept.push(q);
        }
    }
    out
}
