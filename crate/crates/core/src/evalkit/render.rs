use super::{AgreementClass, AggregateTable, IaaSummary, Parameter};

const MISSING: &str = "n/a";

fn row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn header(names: &[&str]) -> String {
    let mut out = row(&names.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    out.push_str(&row(&vec!["---".to_string(); names.len()]));
    out
}

/// Development-style table: one row per parameter, one "mean ± std" column
/// per pipeline configuration.
pub fn render_results_table(columns: &[(&str, &AggregateTable)]) -> String {
    let mut names = vec!["Parameter"];
    names.extend(columns.iter().map(|(n, _)| *n));
    let mut out = header(&names);
    for p in Parameter::ALL {
        if columns.iter().all(|(_, t)| t.get(p).is_none()) {
            continue;
        }
        let mut cells = vec![p.label().to_string()];
        cells.extend(
            columns
                .iter()
                .map(|(_, t)| t.get(p).map_or_else(|| MISSING.into(), |r| r.cell())),
        );
        out.push_str(&row(&cells));
    }
    out
}

/// Validation-style table: final score plus agreement percentages.
/// Relevance appears as a single "Relevant docs" row; sensitivity and
/// specificity only when they were rated.
pub fn render_validation_table(scores: &AggregateTable, iaa: &IaaSummary) -> String {
    let mut out = header(&["Parameter", "Score", "TIAA", "PIAA"]);
    for p in Parameter::ALL {
        if matches!(p, Parameter::CompletelyRelevant | Parameter::PartiallyRelevant) {
            continue;
        }
        let counts = iaa.get(p).copied().unwrap_or_default();
        if counts.total() == 0 && scores.get(p).is_none() {
            continue;
        }
        let score = scores
            .get(p)
            .map_or_else(|| "unresolved".to_string(), |r| r.cell());
        out.push_str(&row(&[
            p.validation_label().to_string(),
            score,
            counts.percent(AgreementClass::Tiaa),
            counts.percent(AgreementClass::Piaa),
        ]));
    }
    out
}
