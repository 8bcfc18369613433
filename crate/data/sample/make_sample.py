#!/usr/bin/env python3
"""Writes the demo corpus, dictionaries, exam and annotation files in this
directory. Deterministic; rerun after editing."""
import json
import random
from pathlib import Path

OUT = Path(__file__).parent
rng = random.Random(7)

TOPICS = {
    "zawał serca": ["troponina", "angioplastyka", "aspiryna", "klopidogrel", "reperfuzja"],
    "zatorowość płucna": ["d-dimery", "angiotomografia", "heparyna", "tromboliza", "duszność"],
    "migotanie przedsionków": ["antykoagulacja", "kardiowersja", "beta-bloker", "CHA2DS2-VASc", "kołatanie"],
    "niewydolność serca": ["NT-proBNP", "diuretyk", "inhibitor ACE", "echokardiografia", "obrzęki"],
    "nadciśnienie tętnicze": ["amlodypina", "tiazyd", "pomiar ciśnienia", "powikłania narządowe", "sól"],
    "zapalenie wsierdzia": ["posiew krwi", "echokardiografia przezprzełykowa", "antybiotykoterapia", "kryteria Duke", "gorączka"],
}
KINDS = ["guideline", "textbook", "journal_article", "case_report", "other"]
FILLER = [
    "Zalecenia podkreślają znaczenie wczesnej diagnostyki.",
    "Postępowanie zależy od stanu klinicznego chorego.",
    "Należy uwzględnić choroby współistniejące i przeciwwskazania.",
    "Badania obserwacyjne potwierdzają korzyść z leczenia.",
    "Monitorowanie obejmuje ocenę objawów i parametrów laboratoryjnych.",
]


def snippet(paragraph, cap=140):
    out = ""
    for word in paragraph.split():
        nxt = (out + " " + word).strip()
        if len(nxt) > cap:
            break
        out = nxt
    return out


def corpus():
    docs = []
    n = 0
    for topic, terms in TOPICS.items():
        for i in range(12):
            n += 1
            picked = rng.sample(terms, 3)
            para = (
                f"W przypadku {topic} kluczowe znaczenie mają {picked[0]} oraz {picked[1]}. "
                f"{rng.choice(FILLER)} Leczenie uwzględnia także {picked[2]}. {rng.choice(FILLER)}"
            )
            docs.append({
                "doc_id": f"doc{n:03d}",
                "title": f"{topic.capitalize()}: {picked[0]} ({i + 1})",
                "source_kind": KINDS[n % len(KINDS)],
                "publication_date": f"20{15 + n % 10}-0{1 + n % 9}-15",
                "paragraph": para,
                "snippet": snippet(para),
                "url_or_locator": f"https://example.org/zrodla/doc{n:03d}",
            })
    return docs


QUESTIONS = [
    ("Które badanie laboratoryjne potwierdza zawał serca?", ["troponina", "d-dimery", "CRP", "kreatynina", "lipidogram"], "A"),
    ("Jakie leczenie stosuje się w zatorowości płucnej z niestabilnością hemodynamiczną?", ["aspiryna", "tromboliza", "diuretyk", "amlodypina", "obserwacja"], "B"),
    ("Która skala ocenia ryzyko udaru w migotaniu przedsionków?", ["NYHA", "Wells", "CHA2DS2-VASc", "Glasgow", "Apgar"], "C"),
    ("Który marker wspiera rozpoznanie niewydolności serca?", ["troponina", "lipaza", "ferrytyna", "NT-proBNP", "TSH"], "D"),
    ("Który lek to leczenie pierwszego wyboru, gdy rozpoznano nadciśnienie tętnicze?", ["heparyna", "metformina", "klopidogrel", "insulina", "amlodypina"], "E"),
    ("Jakie badanie jest kluczowe w zapaleniu wsierdzia?", ["posiew krwi", "spirometria", "kolonoskopia", "EEG", "gastroskopia"], "A"),
    ("Co przedstawia zapis EKG na rycinie?", ["zawał", "migotanie", "blok", "rytm zatokowy", "trzepotanie"], "B"),
    ("Który lek był dawniej zalecany w niewydolności serca?", ["digoksyna", "diuretyk", "inhibitor ACE", "beta-bloker", "spironolakton"], "A"),
]


def exam():
    qs = []
    for no, (stem, answers, correct) in enumerate(QUESTIONS, start=1):
        qs.append({
            "test_no": no,
            "question": stem,
            "answers": dict(zip("ABCDE", answers)),
            "correct": correct,
            "has_image": no == 7,
            "invalidated": no == 8,
        })
    return {"exam_id": "KARD-DEMO", "specialty": "Kardiologia", "session": "Jesień 2024", "questions": qs}


def annotation(qid, who, labels, scores, prio):
    keys = ["credibility", "accuracy", "logic", "completeness_depth", "conciseness", "communicativeness"]
    rec = {"question_id": qid, "annotator_id": who, "doc_labels": labels}
    rec.update(dict(zip(keys, scores)))
    rec["prioritization"] = prio
    return rec


def annotations():
    a, b = [], []
    for no in range(1, 7):
        qid = f"KARD-DEMO-q{no:03d}"
        labels = [rng.choice(["complete", "complete", "partial", "irrelevant"]) for _ in range(10)]
        other = list(labels)
        other[no % 10] = "irrelevant" if labels[no % 10] != "irrelevant" else "partial"
        sa = [rng.randint(3, 4) for _ in range(6)]
        sb = list(sa)
        sb[no % 6] = 7 - sa[no % 6] if no % 3 else 2
        a.append(annotation(qid, "ann1", labels, sa, 4))
        b.append(annotation(qid, "ann2", other, sb, "abstain" if no == 2 else 4))
    return a, b


def resolutions(a, b):
    """A third reader's verdicts on every cross-boundary disagreement."""
    keys = ["credibility", "accuracy", "logic", "completeness_depth", "conciseness", "communicativeness"]
    out = []
    for ra, rb in zip(a, b):
        res = {"question_id": ra["question_id"], "resolver_id": "ann3", "scores": {}, "doc_labels": {}}
        for k in keys:
            if (ra[k] >= 3) != (rb[k] >= 3):
                res["scores"][k] = 3
        if (ra["prioritization"] == "abstain") != (rb["prioritization"] == "abstain"):
            res["scores"]["prioritization"] = 4
        for i, (x, y) in enumerate(zip(ra["doc_labels"], rb["doc_labels"])):
            if x != y and "irrelevant" in (x, y):
                res["doc_labels"][str(i)] = "partial"
        out.append(res)
    return out


def main():
    with open(OUT / "corpus.jsonl", "w", encoding="utf-8") as f:
        for d in corpus():
            f.write(json.dumps(d, ensure_ascii=False) + "\n")
    (OUT / "exam.json").write_text(json.dumps(exam(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    (OUT / "stopwords.txt").write_text(
        "\n".join(["w", "i", "z", "o", "na", "do", "się", "jest", "są", "oraz", "także", "które", "która", "który",
                   "jakie", "co", "przypadku", "mają", "stosuje", "się"]) + "\n",
        encoding="utf-8",
    )
    (OUT / "synonyms.txt").write_text(
        "# one class per line\nzawał, mi, stemi\nzatorowość, zator\nheparyna, antykoagulacja\n"
        "echokardiografia, echo, ukg\nnadciśnienie, hipertensja\n",
        encoding="utf-8",
    )
    a, b = annotations()
    for name, recs in (("annotations_a.jsonl", a), ("annotations_b.jsonl", b)):
        with open(OUT / name, "w", encoding="utf-8") as f:
            for r in recs:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")
    with open(OUT / "resolutions.jsonl", "w", encoding="utf-8") as f:
        for r in resolutions(a, b):
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
