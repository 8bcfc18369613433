use super::{AgreementClass, Assessment, RelevanceLabel, Score};

/// Identical → TIAA; same side of the 2/3 boundary → PIAA; across it →
/// discrepancy.
pub fn classify_score_pair(a: Score, b: Score) -> AgreementClass {
    if a == b {
        AgreementClass::Tiaa
    } else if a.is_positive() == b.is_positive() {
        AgreementClass::Piaa
    } else {
        AgreementClass::Discrepancy
    }
}

/// Irrelevant against any relevant label is a discrepancy; complete against
/// partial is partial agreement.
pub fn classify_relevance_pair(a: RelevanceLabel, b: RelevanceLabel) -> AgreementClass {
    use RelevanceLabel::Irrelevant;
    if a == b {
        AgreementClass::Tiaa
    } else if a == Irrelevant || b == Irrelevant {
        AgreementClass::Discrepancy
    } else {
        AgreementClass::Piaa
    }
}

/// Agreeing to abstain is agreement; disagreeing on assessability is a
/// discrepancy; two scores follow the score rules.
pub fn classify_prioritization_pair(a: Assessment, b: Assessment) -> AgreementClass {
    match (a, b) {
        (Assessment::Abstain, Assessment::Abstain) => AgreementClass::Tiaa,
        (Assessment::Scored(x), Assessment::Scored(y)) => classify_score_pair(x, y),
        _ => AgreementClass::Discrepancy,
    }
}

/// Sensitivity/specificity: only classified when both annotators rated it.
pub fn classify_optional_score_pair(a: Option<Score>, b: Option<Score>) -> AgreementClass {
    match (a, b) {
        (Some(x), Some(y)) => classify_score_pair(x, y),
        _ => AgreementClass::NotApplicable,
    }
}
