use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::analyzer::Analyzer;

/// Synonym classes. Each class is stored as written (first term is the
/// canonical one) and applied symmetrically: any member expands to all
/// other members.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct SynonymDict {
    classes: Vec<Vec<String>>,
    member_of: HashMap<String, Vec<usize>>,
}

impl PartialEq for SynonymDict {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes
    }
}

impl From<Vec<Vec<String>>> for SynonymDict {
    fn from(classes: Vec<Vec<String>>) -> Self {
        let mut member_of: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, class) in classes.iter().enumerate() {
            for term in class {
                let entry = member_of.entry(term.clone()).or_default();
                if entry.last() != Some(&i) {
                    entry.push(i);
                }
            }
        }
        Self { classes, member_of }
    }
}

impl From<SynonymDict> for Vec<Vec<String>> {
    fn from(d: SynonymDict) -> Self {
        d.classes
    }
}

impl SynonymDict {
    /// Parses one class per line, terms separated by commas. Terms are
    /// normalized with `analyzer` (without stopword removal); multi-word
    /// entries cannot match a unigram index and are skipped.
    pub fn parse(text: &str, analyzer: &Analyzer) -> Self {
        let mut classes = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut class: Vec<String> = Vec::new();
            for raw in line.split(',') {
                let tokens = analyzer.normalize_all(raw);
                match tokens.as_slice() {
                    [] => {}
                    [t] => {
                        if !class.contains(t) {
                            class.push(t.clone());
                        }
                    }
                    _ => log::warn!("synonyms line {}: skipping phrase {:?}", i + 1, raw.trim()),
                }
            }
            if class.len() > 1 {
                classes.push(class);
            }
        }
        classes.into()
    }

    pub fn classes(&self) -> &[Vec<String>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Every term sharing a class with `term`, excluding `term` itself.
    pub fn synonyms_of<'a>(&'a self, term: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.member_of
            .get(term)
            .into_iter()
            .flatten()
            .flat_map(move |&c| self.classes[c].iter())
            .map(String::as_str)
            .filter(move |t| *t != term)
    }
}

pub const SYNONYM_WEIGHT: f64 = 0.5;

/// Query terms with their weights, ordered by term.
pub type WeightedQuery = BTreeMap<String, f64>;

/// Each token at weight 1.0, each synonym at [`SYNONYM_WEIGHT`]; a term
/// reached more than once keeps its largest weight.
pub fn expand_query(tokens: &[String], dict: &SynonymDict) -> WeightedQuery {
    let mut out = WeightedQuery::new();
    let mut bump = |term: &str, w: f64| {
        let slot = out.entry(term.to_string()).or_insert(w);
        if *slot < w {
            *slot = w;
        }
    };
    for t in tokens {
        bump(t, 1.0);
        for s in dict.synonyms_of(t) {
            bump(s, SYNONYM_WEIGHT);
        }
    }
    out
}
