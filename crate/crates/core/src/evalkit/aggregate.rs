use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnnotationRecord, Parameter};

/// Per-question values entering aggregation. Absent parameters (not
/// evaluated, abstained) are excluded from that parameter's mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalValues {
    pub question_id: String,
    pub values: BTreeMap<Parameter, f64>,
}

impl FinalValues {
    /// Values from a single annotator, used when there is no second opinion.
    pub fn from_record(r: &AnnotationRecord) -> Self {
        let mut values = BTreeMap::new();
        for p in Parameter::ALL {
            let v = match p {
                Parameter::CompletelyRelevant => Some(r.complete_count() as f64),
                Parameter::PartiallyRelevant => Some(r.partial_count() as f64),
                Parameter::TotalRelevant => Some(r.total_relevant() as f64),
                other => r.score(other).map(|s| f64::from(s.value())),
            };
            if let Some(v) = v {
                values.insert(p, v);
            }
        }
        Self {
            question_id: r.question_id.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl AggregateRow {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            n: values.len(),
            mean,
            std: var.sqrt(),
        })
    }

    /// "3.50 ± 0.50"
    pub fn cell(&self) -> String {
        format!("{:.2} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateTable {
    pub questions: usize,
    pub rows: BTreeMap<Parameter, AggregateRow>,
}

impl AggregateTable {
    pub fn get(&self, p: Parameter) -> Option<&AggregateRow> {
        self.rows.get(&p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("nothing to aggregate")]
    Empty,
}

pub fn aggregate(records: &[FinalValues]) -> Result<AggregateTable, AggregateError> {
    if records.is_empty() {
        return Err(AggregateError::Empty);
    }
    let mut rows = BTreeMap::new();
    for p in Parameter::ALL {
        let vals: Vec<f64> = records.iter().filter_map(|r| r.values.get(&p).copied()).collect();
        if let Some(row) = AggregateRow::from_values(&vals) {
            rows.insert(p, row);
        }
    }
    Ok(AggregateTable {
        questions: records.len(),
        rows,
    })
}
