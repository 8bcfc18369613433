//! Canonical quiz markup.
//!
//! ```text
//! <div class="exam" data-exam-id=".." data-specialty=".." data-session="..">
//!   <div class="q" id="N" [data-image="true"] [data-invalidated="true"]>
//!     <p class="stem">..</p>
//!     <ol class="ans"><li>..</li> x5 </ol>
//!   </div> ...
//!   <table class="key"><tr><td>N</td><td>LETTER</td></tr> ... </table>
//! </div>
//! ```
//!
//! Anything outside the `exam` element (doctype, `html`/`body` wrappers) is
//! ignored. Text is taken verbatim after entity decoding; inline tags inside
//! a stem or answer contribute their text, `<br>` becomes a newline.

use std::collections::BTreeMap;

use super::{Choice, ExamFile, ExamQuestion, IngestError, Letter};

#[derive(Debug)]
enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
    offset: usize,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn has_class(&self, class: &str) -> bool {
        self.attr("class")
            .is_some_and(|c| c.split_whitespace().any(|c| c == class))
    }

    fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    fn text(&self) -> String {
        let mut out = String::new();
        collect_text(&self.children, &mut out);
        out
    }
}

fn collect_text(nodes: &[Node], out: &mut String) {
    for n in nodes {
        match n {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) if e.name == "br" => out.push('\n'),
            Node::Element(e) => collect_text(&e.children, out),
        }
    }
}

const VOID: &[&str] = &["br", "img", "hr", "meta", "link", "input", "col", "wbr"];

fn parse_err(offset: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        offset,
        message: message.into(),
    }
}

/// Builds a node tree, rejecting unclosed and mismatched tags.
fn parse_tree(src: &str) -> Result<Vec<Node>, IngestError> {
    let mut stack: Vec<Element> = vec![Element {
        name: String::new(),
        attrs: Vec::new(),
        children: Vec::new(),
        offset: 0,
    }];
    let bytes = src.as_bytes();
    let mut pos = 0;
    while pos < src.len() {
        if bytes[pos] != b'<' {
            let end = src[pos..].find('<').map_or(src.len(), |i| pos + i);
            let text = html_escape::decode_html_entities(&src[pos..end]).into_owned();
            stack
                .last_mut()
                .expect("root stays on the stack")
                .children
                .push(Node::Text(text));
            pos = end;
            continue;
        }
        let rest = &src[pos..];
        if rest.starts_with("<!--") {
            let end = rest
                .find("-->")
                .ok_or_else(|| parse_err(pos, "unterminated comment"))?;
            pos += end + 3;
            continue;
        }
        let end = rest
            .find('>')
            .ok_or_else(|| parse_err(pos, "unterminated tag"))?;
        let inner = &rest[1..end];
        let tag_at = pos;
        pos += end + 1;
        if inner.starts_with('!') || inner.starts_with('?') {
            continue;
        }
        if let Some(name) = inner.strip_prefix('/') {
            let name = name.trim().to_ascii_lowercase();
            if VOID.contains(&name.as_str()) {
                continue;
            }
            if stack.len() == 1 {
                return Err(parse_err(tag_at, format!("unexpected </{name}>")));
            }
            let open = stack.pop().expect("checked non-root");
            if open.name != name {
                return Err(parse_err(
                    open.offset,
                    format!("<{}> closed by </{name}>", open.name),
                ));
            }
            stack
                .last_mut()
                .expect("root stays on the stack")
                .children
                .push(Node::Element(open));
            continue;
        }
        let self_closing = inner.ends_with('/');
        let inner = inner.trim_end_matches('/');
        let (name, attrs) = parse_tag(inner, tag_at)?;
        let el = Element {
            attrs,
            children: Vec::new(),
            offset: tag_at,
            name,
        };
        if self_closing || VOID.contains(&el.name.as_str()) {
            stack
                .last_mut()
                .expect("root stays on the stack")
                .children
                .push(Node::Element(el));
        } else {
            stack.push(el);
        }
    }
    if stack.len() > 1 {
        let open = &stack[stack.len() - 1];
        return Err(parse_err(open.offset, format!("unclosed <{}>", open.name)));
    }
    Ok(stack.pop().expect("root").children)
}

fn parse_tag(inner: &str, at: usize) -> Result<(String, Vec<(String, String)>), IngestError> {
    let inner = inner.trim();
    let name_end = inner
        .find(|c: char| c.is_whitespace())
        .unwrap_or(inner.len());
    let name = inner[..name_end].to_ascii_lowercase();
    if name.is_empty() {
        return Err(parse_err(at, "empty tag name"));
    }
    let mut attrs = Vec::new();
    let mut rest = inner[name_end..].trim_start();
    while !rest.is_empty() {
        let key_end = rest
            .find(|c: char| c == '=' || c.is_whitespace())
            .unwrap_or(rest.len());
        let key = rest[..key_end].to_ascii_lowercase();
        rest = rest[key_end..].trim_start();
        let value = if let Some(after) = rest.strip_prefix('=') {
            let after = after.trim_start();
            let (raw, remaining) = match after.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let close = after[1..]
                        .find(q)
                        .ok_or_else(|| parse_err(at, format!("unterminated value for {key}")))?;
                    (&after[1..1 + close], &after[close + 2..])
                }
                _ => {
                    let e = after
                        .find(char::is_whitespace)
                        .unwrap_or(after.len());
                    (&after[..e], &after[e..])
                }
            };
            rest = remaining.trim_start();
            html_escape::decode_html_entities(raw).into_owned()
        } else {
            String::new()
        };
        attrs.push((key, value));
    }
    Ok((name, attrs))
}

fn find_exam(nodes: &[Node]) -> Option<&Element> {
    nodes.iter().find_map(|n| match n {
        Node::Element(e) if e.name == "div" && e.has_class("exam") => Some(e),
        Node::Element(e) => find_exam(&e.children),
        Node::Text(_) => None,
    })
}

fn flag(el: &Element, key: &str, question_no: u32) -> Result<bool, IngestError> {
    match el.attr(key) {
        None | Some("false") => Ok(false),
        Some("true") | Some("") => Ok(true),
        Some(v) => Err(IngestError::Schema {
            question_no,
            reason: format!("{key}={v:?} is not a boolean"),
        }),
    }
}

/// Parses the canonical quiz markup into an [`ExamFile`].
pub fn parse_exam_quiz_html(bytes: &[u8]) -> Result<ExamFile, IngestError> {
    let src = std::str::from_utf8(bytes)
        .map_err(|e| parse_err(e.valid_up_to(), "input is not valid UTF-8"))?;
    let tree = parse_tree(src)?;
    let exam = find_exam(&tree).ok_or_else(|| parse_err(0, "no <div class=\"exam\"> element"))?;

    let exam_id = exam.attr("data-exam-id").unwrap_or_default().to_string();
    let specialty = exam.attr("data-specialty").unwrap_or_default().to_string();
    let session = exam.attr("data-session").unwrap_or_default().to_string();

    struct Block {
        no: u32,
        stem: String,
        answers: Vec<String>,
        has_image: bool,
        invalidated: bool,
    }
    let mut blocks = Vec::new();
    let mut key: Option<BTreeMap<u32, Letter>> = None;
    let mut key_rows = 0;

    for el in exam.elements() {
        if el.name == "div" && el.has_class("q") {
            let no: u32 = el
                .attr("id")
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| parse_err(el.offset, "question block without numeric id"))?;
            let stem = el
                .elements()
                .find(|c| c.name == "p" && c.has_class("stem"))
                .ok_or_else(|| parse_err(el.offset, format!("question {no} has no stem")))?
                .text();
            let ans = el
                .elements()
                .find(|c| c.name == "ol" && c.has_class("ans"))
                .ok_or_else(|| parse_err(el.offset, format!("question {no} has no answer list")))?;
            let answers: Vec<String> = ans
                .elements()
                .filter(|c| c.name == "li")
                .map(Element::text)
                .collect();
            blocks.push(Block {
                no,
                stem,
                answers,
                has_image: flag(el, "data-image", no)?,
                invalidated: flag(el, "data-invalidated", no)?,
            });
        } else if el.name == "table" && el.has_class("key") {
            if key.is_some() {
                return Err(parse_err(el.offset, "more than one answer key"));
            }
            let mut map = BTreeMap::new();
            for row in key_table_rows(el) {
                let cells: Vec<&Element> = row.elements().filter(|c| c.name == "td").collect();
                if cells.is_empty() {
                    continue; // header row
                }
                if cells.len() != 2 {
                    return Err(parse_err(row.offset, "answer key rows need two cells"));
                }
                let no_text = cells[0].text();
                let no: u32 = no_text.trim().parse().map_err(|_| {
                    parse_err(cells[0].offset, format!("bad question number {no_text:?}"))
                })?;
                let letter_text = cells[1].text();
                let letter: Letter = letter_text.parse().map_err(|_| IngestError::Schema {
                    question_no: no,
                    reason: format!("answer key letter {letter_text:?} is not A..E"),
                })?;
                key_rows += 1;
                if map.insert(no, letter).is_some() {
                    return Err(IngestError::Schema {
                        question_no: no,
                        reason: "listed twice in the answer key".into(),
                    });
                }
            }
            key = Some(map);
        }
    }

    let key = key.ok_or_else(|| parse_err(exam.offset, "missing <table class=\"key\">"))?;
    for b in &blocks {
        if !key.contains_key(&b.no) {
            return Err(IngestError::Schema {
                question_no: b.no,
                reason: "missing from the answer key".into(),
            });
        }
    }
    if key_rows != blocks.len() {
        return Err(IngestError::KeyMismatch {
            key_rows,
            questions: blocks.len(),
        });
    }

    let mut questions = Vec::with_capacity(blocks.len());
    for b in blocks {
        if b.answers.len() != 5 {
            return Err(IngestError::Schema {
                question_no: b.no,
                reason: format!("expected 5 answers, found {}", b.answers.len()),
            });
        }
        questions.push(ExamQuestion {
            exam_id: exam_id.clone(),
            question_no: b.no,
            stem: b.stem,
            choices: Letter::ALL
                .into_iter()
                .zip(b.answers)
                .map(|(letter, text)| Choice { letter, text })
                .collect(),
            correct: key[&b.no],
            has_image: b.has_image,
            invalidated: b.invalidated,
            specialty: specialty.clone(),
            session: session.clone(),
        });
    }
    let file = ExamFile {
        exam_id,
        specialty,
        session,
        questions,
    };
    file.validate()?;
    Ok(file)
}

/// `tr` rows, whether or not they sit inside a `tbody`/`thead`.
fn key_table_rows(table: &Element) -> Vec<&Element> {
    let mut rows = Vec::new();
    for el in table.elements() {
        match el.name.as_str() {
            "tr" => rows.push(el),
            "tbody" | "thead" => rows.extend(el.elements().filter(|r| r.name == "tr")),
            _ => {}
        }
    }
    rows
}

fn esc(s: &str) -> String {
    html_escape::encode_double_quoted_attribute(s).into_owned()
}

/// Serializes an exam to the canonical quiz markup.
pub fn render_exam_quiz_html(exam: &ExamFile) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<div class=\"exam\" data-exam-id=\"{}\" data-specialty=\"{}\" data-session=\"{}\">",
        esc(&exam.exam_id),
        esc(&exam.specialty),
        esc(&exam.session)
    );
    for q in &exam.questions {
        let _ = write!(out, "<div class=\"q\" id=\"{}\"", q.question_no);
        if q.has_image {
            out.push_str(" data-image=\"true\"");
        }
        if q.invalidated {
            out.push_str(" data-invalidated=\"true\"");
        }
        out.push_str(">\n");
        let _ = writeln!(out, "<p class=\"stem\">{}</p>", esc(&q.stem));
        out.push_str("<ol class=\"ans\">\n");
        for c in &q.choices {
            let _ = writeln!(out, "<li>{}</li>", esc(&c.text));
        }
        out.push_str("</ol>\n</div>\n");
    }
    out.push_str("<table class=\"key\">\n<tr><th>Nr</th><th>Odp.</th></tr>\n");
    for q in &exam.questions {
        let _ = writeln!(out, "<tr><td>{}</td><td>{}</td></tr>", q.question_no, q.correct);
    }
    out.push_str("</table>\n</div>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exam::test_support::exam;

    const TWO: &str = r#"<!DOCTYPE html><html><body>
<div class="exam" data-exam-id="CHIR-2024" data-specialty="Chirurgia ogólna" data-session="Fall 2024">
<div class="q" id="1"><p class="stem">Objaw Chełmońskiego &amp; Blumberga?</p>
<ol class="ans"><li>a</li><li>b</li><li>c</li><li>d</li><li>e</li></ol></div>
<div class="q" id="2" data-image="true"><p class="stem">Na zdjęciu<br>widoczne</p>
<ol class="ans"><li>a</li><li><b>b</b></li><li>c</li><li>d</li><li>e</li></ol></div>
<table class="key"><tbody><tr><th>Nr</th><th>Odp</th></tr>
<tr><td>1</td><td>D</td></tr><tr><td>2</td><td>B</td></tr></tbody></table>
</div></body></html>"#;

    #[test]
    fn two_questions_with_key() {
        let e = parse_exam_quiz_html(TWO.as_bytes()).unwrap();
        assert_eq!(e.exam_id, "CHIR-2024");
        assert_eq!(e.questions.len(), 2);
        assert_eq!(e.questions[0].correct, Letter::D);
        assert_eq!(e.questions[1].correct, Letter::B);
        assert_eq!(e.questions[0].stem, "Objaw Chełmońskiego & Blumberga?");
        assert_eq!(e.questions[1].stem, "Na zdjęciu\nwidoczne");
        assert_eq!(e.questions[1].choices[1].text, "b");
        assert!(e.questions[1].has_image);
        assert!(!e.questions[0].invalidated);
    }

    #[test]
    fn question_missing_from_key() {
        let src = TWO.replace("<tr><td>2</td><td>B</td></tr>", "");
        let err = parse_exam_quiz_html(src.as_bytes()).unwrap_err();
        assert_eq!(err.question_no(), Some(2));
    }

    #[test]
    fn key_row_count_mismatch() {
        let src = TWO.replace(
            "<tr><td>2</td><td>B</td></tr>",
            "<tr><td>2</td><td>B</td></tr><tr><td>3</td><td>A</td></tr>",
        );
        assert_eq!(
            parse_exam_quiz_html(src.as_bytes()).unwrap_err(),
            IngestError::KeyMismatch {
                key_rows: 3,
                questions: 2
            }
        );
    }

    #[test]
    fn unclosed_question_block() {
        let src = TWO.replacen("</ol></div>", "</ol>", 1);
        assert!(matches!(
            parse_exam_quiz_html(src.as_bytes()),
            Err(IngestError::Parse { .. })
        ));
    }

    #[test]
    fn missing_key_table() {
        let start = TWO.find("<table").unwrap();
        let end = TWO.find("</table>").unwrap() + "</table>".len();
        let src = format!("{}{}", &TWO[..start], &TWO[end..]);
        assert!(matches!(
            parse_exam_quiz_html(src.as_bytes()),
            Err(IngestError::Parse { .. })
        ));
    }

    #[test]
    fn four_answers_is_schema_error() {
        let src = TWO.replacen("<li>e</li>", "", 1);
        assert_eq!(
            parse_exam_quiz_html(src.as_bytes()).unwrap_err().question_no(),
            Some(1)
        );
    }

    #[test]
    fn render_then_parse_is_identity() {
        let e = exam(25);
        assert_eq!(
            parse_exam_quiz_html(render_exam_quiz_html(&e).as_bytes()).unwrap(),
            e
        );
    }
}
