use medcourse_core::evalkit::{
    merge, resolve, AgreementClass, AnnotationRecord, Assessment, FieldRef, Parameter,
    RelevanceLabel, Resolution, ResolutionError, Score,
};
use proptest::prelude::*;

fn score() -> impl Strategy<Value = Score> {
    (1u8..=4).prop_map(|v| Score::new(v).unwrap())
}

fn label() -> impl Strategy<Value = RelevanceLabel> {
    prop::sample::select(RelevanceLabel::ALL.to_vec())
}

fn assessment() -> impl Strategy<Value = Assessment> {
    prop_oneof![1 => Just(Assessment::Abstain), 3 => score().prop_map(Assessment::Scored)]
}

fn record(who: &'static str) -> impl Strategy<Value = AnnotationRecord> {
    (
        prop::option::of(score()),
        prop::option::of(score()),
        prop::collection::vec(label(), 10),
        prop::array::uniform6(score()),
        assessment(),
    )
        .prop_map(move |(sens, spec, labels, s, prio)| AnnotationRecord {
            question_id: "q".into(),
            annotator_id: who.into(),
            sensitivity: sens,
            specificity: spec,
            doc_labels: labels,
            credibility: s[0],
            accuracy: s[1],
            logic: s[2],
            completeness_depth: s[3],
            conciseness: s[4],
            communicativeness: s[5],
            prioritization: prio,
        })
}

/// A verdict for every discrepant field, drawn from the entropy in `pick`.
fn full_resolution(a: &AnnotationRecord, b: &AnnotationRecord, pick: &[u8]) -> Resolution {
    let merged = merge(a, b, None).unwrap();
    let mut r = Resolution::new("q", "ann-c");
    for (i, f) in merged.unresolved.iter().enumerate() {
        let x = pick[i % pick.len()];
        match *f {
            FieldRef::Param(Parameter::Prioritization) if x % 5 == 0 => {
                r.scores.insert(Parameter::Prioritization, Assessment::Abstain);
            }
            FieldRef::Param(p) => {
                r.scores.insert(p, Assessment::Scored(Score::new(x % 4 + 1).unwrap()));
            }
            FieldRef::Doc(d) => {
                r.doc_labels.insert(d, RelevanceLabel::ALL[x as usize % 3]);
            }
        }
    }
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn resolution_touches_only_discrepancies(
        a in record("ann-a"),
        b in record("ann-b"),
        pick in prop::collection::vec(any::<u8>(), 1..8),
    ) {
        let unresolved = merge(&a, &b, None).unwrap();
        let res = full_resolution(&a, &b, &pick);
        let out = resolve(None, &a, &b, &res).unwrap();
        prop_assert!(out.unresolved.is_empty());
        let resolved: Vec<FieldRef> = res.fields().collect();
        prop_assert_eq!(&out.resolved, &resolved);

        let before = unresolved.final_values().values;
        let after = out.final_values().values;
        for (p, f) in &out.fields {
            let was = &unresolved.fields[p];
            prop_assert_eq!(f.class, was.class);
            prop_assert_eq!((f.a, f.b), (was.a, was.b));
            if f.class != AgreementClass::Discrepancy {
                prop_assert!(f.resolved_to.is_none());
                prop_assert_eq!(before.get(p), after.get(p), "{}", p);
            } else {
                prop_assert_eq!(f.resolved_to, res.scores.get(p).copied());
            }
        }
        for (i, d) in out.docs.iter().enumerate() {
            prop_assert_eq!(d.class, unresolved.docs[i].class);
            prop_assert_eq!(d.resolved_to.is_some(), d.class == AgreementClass::Discrepancy);
        }

        // A verdict on any field outside the dispute is refused.
        if let Some((p, _)) = out.fields.iter().find(|(_, f)| {
            f.class != AgreementClass::Discrepancy && f.class != AgreementClass::NotApplicable
        }) {
            let mut bad = res.clone();
            bad.scores.insert(*p, Assessment::Scored(Score::new(1).unwrap()));
            prop_assert_eq!(
                resolve(None, &a, &b, &bad).unwrap_err(),
                ResolutionError::NotInDispute(FieldRef::Param(*p))
            );
        }
        if let Some(i) = out.docs.iter().position(|d| d.class != AgreementClass::Discrepancy) {
            let mut bad = res.clone();
            bad.doc_labels.insert(i, RelevanceLabel::Partial);
            prop_assert_eq!(resolve(None, &a, &b, &bad).unwrap_err(), ResolutionError::NotInDispute(FieldRef::Doc(i)));
        }
        for who in ["ann-a", "ann-b"] {
            let mut own = res.clone();
            own.resolver_id = who.into();
            prop_assert_eq!(resolve(None, &a, &b, &own).unwrap_err(), ResolutionError::SelfResolve(who.into()));
        }
    }
}

#[test]
fn annotation_jsonl_round_trip() {
    let text = r#"{"question_id":"LEK-q001","annotator_id":"a1","doc_labels":["complete","partial","irrelevant","complete","complete","partial","irrelevant","complete","complete","partial"],"credibility":3,"accuracy":4,"logic":4,"completeness_depth":3,"conciseness":3,"communicativeness":4,"prioritization":"abstain"}
{"question_id":"LEK-q001","annotator_id":"a2","sensitivity":4,"specificity":3,"doc_labels":["complete","complete","partial","complete","irrelevant","partial","irrelevant","complete","complete","partial"],"credibility":2,"accuracy":4,"logic":3,"completeness_depth":3,"conciseness":4,"communicativeness":4,"prioritization":4}
"#;
    let recs = AnnotationRecord::parse_jsonl(text).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].total_relevant(), 8);
    let line = serde_json::to_string(&recs[1]).unwrap();
    assert_eq!(line, text.lines().nth(1).unwrap());
    let merged = merge(&recs[0], &recs[1], None).unwrap();
    assert_eq!(
        merged.unresolved,
        vec![
            FieldRef::Param(Parameter::Credibility),
            FieldRef::Param(Parameter::Prioritization),
            FieldRef::Doc(2),
            FieldRef::Doc(4)
        ]
    );
}
