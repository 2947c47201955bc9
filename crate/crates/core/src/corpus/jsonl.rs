//! One JSON object per line. An optional first line `{"corpus": {...}}`
//! carries provenance; every other line is a section.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Provenance};
use crate::text::{compute_shape, ClassLabel, PosTag, Section, Sentence, TokenRecord, TokenShape, MAX_SENTENCE_TOKENS};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    corpus: Provenance,
}

#[derive(Serialize, Deserialize)]
struct SectionLine {
    doc_id: String,
    section_id: String,
    sentences: Vec<SentenceLine>,
}

#[derive(Serialize, Deserialize)]
struct SentenceLine {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<TokenLine>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    span: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "is_false")]
    truncated: bool,
}

#[derive(Serialize, Deserialize)]
struct TokenLine {
    w: String,
    pos: String,
    shape: String,
}

fn is_false(b: &bool) -> bool {
    !*b
}

pub fn read_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| CorpusError::Parse {
            line,
            message: e.to_string(),
        })?;
        if value.get("corpus").is_some() {
            if line != 1 {
                return Err(CorpusError::Parse {
                    line,
                    message: "corpus header must be the first line".into(),
                });
            }
            let h: Header = serde_json::from_value(value).map_err(|e| CorpusError::Parse {
                line,
                message: e.to_string(),
            })?;
            corpus.provenance = h.corpus;
            continue;
        }
        let parsed: SectionLine = serde_json::from_value(value).map_err(|e| CorpusError::Parse {
            line,
            message: e.to_string(),
        })?;
        let section = to_section(parsed, line)?;
        if !seen.insert((section.doc_id.clone(), section.section_id.clone())) {
            return Err(CorpusError::DuplicateSection {
                doc_id: section.doc_id,
                section_id: section.section_id,
                line,
            });
        }
        corpus.sections.push(section);
    }
    Ok(corpus)
}

fn to_section(line: SectionLine, lineno: usize) -> Result<Section, CorpusError> {
    let err = |message: String| CorpusError::Parse { line: lineno, message };
    if line.sentences.is_empty() {
        return Err(err("field `sentences`: section has no sentences".into()));
    }
    let mut sentences = Vec::with_capacity(line.sentences.len());
    for (k, s) in line.sentences.into_iter().enumerate() {
        let label = match &s.label {
            None => None,
            Some(key) => Some(
                ClassLabel::parse(key)
                    .ok_or_else(|| err(format!("sentence {k}: field `label`: unknown class {key:?}")))?,
            ),
        };
        let mut sentence = match s.tokens {
            None => Sentence::from_text(&s.text, label),
            Some(tokens) => {
                if tokens.is_empty() || tokens.len() > MAX_SENTENCE_TOKENS {
                    return Err(err(format!(
                        "sentence {k}: field `tokens`: expected 1..={MAX_SENTENCE_TOKENS} tokens, got {}",
                        tokens.len()
                    )));
                }
                let mut records = Vec::with_capacity(tokens.len());
                for (j, t) in tokens.into_iter().enumerate() {
                    let pos = PosTag::parse(&t.pos)
                        .ok_or_else(|| err(format!("sentence {k} token {j}: field `pos`: unknown tag {:?}", t.pos)))?;
                    let shape = TokenShape::parse(&t.shape).ok_or_else(|| {
                        err(format!("sentence {k} token {j}: field `shape`: unknown shape {:?}", t.shape))
                    })?;
                    if shape != compute_shape(&t.w) {
                        return Err(err(format!(
                            "sentence {k} token {j}: field `shape`: {:?} does not match token {:?}",
                            t.shape, t.w
                        )));
                    }
                    records.push(TokenRecord {
                        surface: t.w,
                        pos,
                        shape,
                    });
                }
                Sentence {
                    text: s.text,
                    tokens: records,
                    label,
                    span: None,
                    truncated: false,
                }
            }
        };
        if sentence.tokens.is_empty() {
            return Err(err(format!("sentence {k}: field `text`: no tokens")));
        }
        if let Some([a, b]) = s.span {
            if a > b {
                return Err(err(format!("sentence {k}: field `span`: start {a} after end {b}")));
            }
            sentence.span = Some(a..b);
        }
        sentence.truncated |= s.truncated;
        sentences.push(sentence);
    }
    let mut last_end = 0;
    for (k, s) in sentences.iter().enumerate() {
        if let Some(span) = &s.span {
            if span.start < last_end {
                return Err(err(format!("sentence {k}: field `span`: overlaps the previous sentence")));
            }
            last_end = span.end;
        }
    }
    Ok(Section {
        doc_id: line.doc_id,
        section_id: line.section_id,
        sentences,
    })
}

/// Renders the corpus, header first; `parse_corpus` inverts it exactly.
pub fn render_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    let header = Header {
        corpus: corpus.provenance.clone(),
    };
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for section in &corpus.sections {
        let line = SectionLine {
            doc_id: section.doc_id.clone(),
            section_id: section.section_id.clone(),
            sentences: section
                .sentences
                .iter()
                .map(|s| SentenceLine {
                    text: s.text.clone(),
                    tokens: Some(
                        s.tokens
                            .iter()
                            .map(|t| TokenLine {
                                w: t.surface.clone(),
                                pos: t.pos.as_str().into(),
                                shape: t.shape.key().into(),
                            })
                            .collect(),
                    ),
                    label: s.label.map(|l| l.key().to_string()),
                    span: s.span.as_ref().map(|r| [r.start, r.end]),
                    truncated: s.truncated,
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("section serializes"));
        out.push('\n');
    }
    out
}

/// Writes atomically; a failed write leaves no file behind.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    crate::fsio::write_atomic(path, render_corpus(corpus).as_bytes()).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{assemble_section, MAX_SECTION_SENTENCES};

    fn sample() -> Corpus {
        let mut sections = assemble_section(
            "d1",
            "s1",
            "The Supplier shall: (a) only process the data; (b) not transfer it.",
            &[
                ClassLabel::ObligationListIntro,
                ClassLabel::ObligationListItem,
                ClassLabel::ProhibitionListItem,
            ],
            MAX_SECTION_SENTENCES,
        )
        .unwrap();
        let mut plain = Section {
            doc_id: "d1".into(),
            section_id: "s2".into(),
            sentences: vec![Sentence::from_text("Nothing here is binding.", None)],
        };
        plain.sentences[0].truncated = true;
        sections.push(plain);
        Corpus::new(
            sections,
            Provenance {
                source: "test".into(),
                seed: Some(3),
            },
        )
    }

    #[test]
    fn round_trip_is_lossless() {
        let c = sample();
        assert_eq!(parse_corpus(&render_corpus(&c)).unwrap(), c);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let c = parse_corpus("").unwrap();
        assert!(c.sections.is_empty());
        assert_eq!(c.provenance, Provenance::default());
    }

    #[test]
    fn minimal_line_is_filled_by_the_pipeline() {
        let c = parse_corpus(
            r#"{"doc_id":"a","section_id":"1","sentences":[{"text":"The Client shall pay.","label":"Obligation"}]}"#,
        )
        .unwrap();
        let s = &c.sections[0].sentences[0];
        assert_eq!(s.label, Some(ClassLabel::Obligation));
        assert_eq!(s.tokens.len(), 5);
    }

    #[test]
    fn missing_field_is_named_with_line() {
        let text = "{\"doc_id\":\"a\",\"section_id\":\"1\",\"sentences\":[{\"text\":\"x\"}]}\n{\"doc_id\":\"a\",\"sentences\":[]}";
        let e = parse_corpus(text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.starts_with("line 2"), "{msg}");
        assert!(msg.contains("section_id"), "{msg}");
    }

    #[test]
    fn rejects_bad_values() {
        let bad_label = r#"{"doc_id":"a","section_id":"1","sentences":[{"text":"x","label":"Maybe"}]}"#;
        assert!(parse_corpus(bad_label).unwrap_err().to_string().contains("label"));
        let bad_shape =
            r#"{"doc_id":"a","section_id":"1","sentences":[{"text":"x","tokens":[{"w":"x","pos":"NN","shape":"ALL_CAPS"}]}]}"#;
        assert!(parse_corpus(bad_shape).unwrap_err().to_string().contains("shape"));
        let dup = "{\"doc_id\":\"a\",\"section_id\":\"1\",\"sentences\":[{\"text\":\"x\"}]}\n{\"doc_id\":\"a\",\"section_id\":\"1\",\"sentences\":[{\"text\":\"y\"}]}";
        assert!(matches!(
            parse_corpus(dup).unwrap_err(),
            CorpusError::DuplicateSection { line: 2, .. }
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let c = sample();
        write_corpus(&c, &path).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), c);
    }
}
