//! From raw section text to [`Section`]s of tagged, shaped tokens.

mod pos;
mod shape;
mod split;
mod tokenize;

pub use pos::{tag_pos, PosTag, POS_TAGS};
pub use shape::{compute_shape, TokenShape};
pub use split::{split_sentences, Segment};
pub use tokenize::tokenize;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;
use thiserror::Error;

/// Longest sentence kept; extra tokens are dropped and the sentence flagged.
pub const MAX_SENTENCE_TOKENS: usize = 150;
/// Default cap on sentences per section before chunking.
pub const MAX_SECTION_SENTENCES: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("section {doc_id}/{section_id}: {labels} labels for {sentences} sentences")]
    Alignment {
        doc_id: String,
        section_id: String,
        labels: usize,
        sentences: usize,
    },
    #[error("section {doc_id}/{section_id} contains no sentences")]
    EmptySection { doc_id: String, section_id: String },
}

/// The six sentence classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    None,
    Obligation,
    Prohibition,
    ObligationListIntro,
    ObligationListItem,
    ProhibitionListItem,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 6] = [
        ClassLabel::None,
        ClassLabel::Obligation,
        ClassLabel::Prohibition,
        ClassLabel::ObligationListIntro,
        ClassLabel::ObligationListItem,
        ClassLabel::ProhibitionListItem,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Identifier used in corpus files and checkpoints.
    pub fn key(self) -> &'static str {
        match self {
            ClassLabel::None => "None",
            ClassLabel::Obligation => "Obligation",
            ClassLabel::Prohibition => "Prohibition",
            ClassLabel::ObligationListIntro => "ObligationListIntro",
            ClassLabel::ObligationListItem => "ObligationListItem",
            ClassLabel::ProhibitionListItem => "ProhibitionListItem",
        }
    }

    pub fn parse(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.key() == key)
    }

    /// Row label used in metric tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassLabel::None => "None",
            ClassLabel::Obligation => "Obligation",
            ClassLabel::Prohibition => "Prohibition",
            ClassLabel::ObligationListIntro => "Obl. List Begin",
            ClassLabel::ObligationListItem => "Obl. List Item",
            ClassLabel::ProhibitionListItem => "Proh. List Item",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    pub surface: String,
    pub pos: PosTag,
    pub shape: TokenShape,
}

impl TokenRecord {
    /// Builds a record with its shape derived from the surface.
    pub fn new(surface: impl Into<String>, pos: PosTag) -> Self {
        let surface = surface.into();
        let shape = compute_shape(&surface);
        TokenRecord { surface, pos, shape }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<TokenRecord>,
    pub label: Option<ClassLabel>,
    /// Byte offsets into the section text, when known.
    pub span: Option<Range<usize>>,
    pub truncated: bool,
}

impl Sentence {
    /// Tokenizes, tags and shapes `text`, truncating to
    /// [`MAX_SENTENCE_TOKENS`].
    pub fn from_text(text: &str, label: Option<ClassLabel>) -> Self {
        let surfaces = tokenize(text);
        let tags = tag_pos(&surfaces, None);
        Self::from_parts(text, surfaces, tags, label)
    }

    pub fn from_parts(text: &str, surfaces: Vec<String>, tags: Vec<PosTag>, label: Option<ClassLabel>) -> Self {
        let truncated = surfaces.len() > MAX_SENTENCE_TOKENS;
        let tokens = surfaces
            .into_iter()
            .zip(tags)
            .take(MAX_SENTENCE_TOKENS)
            .map(|(s, p)| TokenRecord::new(s, p))
            .collect();
        Sentence {
            text: text.to_string(),
            tokens,
            label,
            span: None,
            truncated,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub doc_id: String,
    pub section_id: String,
    pub sentences: Vec<Sentence>,
}

impl Section {
    /// Section text as the sentences joined by single spaces.
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }
}

/// Splits, tokenizes, tags and shapes a raw section.
///
/// `labels` is either empty or has one entry per produced sentence. Sections
/// with more than `max_sentences` sentences are returned as consecutive
/// chunks whose ids get a `.1`, `.2`, ... suffix.
pub fn assemble_section(
    doc_id: &str,
    section_id: &str,
    raw_text: &str,
    labels: &[ClassLabel],
    max_sentences: usize,
) -> Result<Vec<Section>, TextError> {
    let segments = split_sentences(raw_text);
    if segments.is_empty() {
        return Err(TextError::EmptySection {
            doc_id: doc_id.into(),
            section_id: section_id.into(),
        });
    }
    if !labels.is_empty() && labels.len() != segments.len() {
        return Err(TextError::Alignment {
            doc_id: doc_id.into(),
            section_id: section_id.into(),
            labels: labels.len(),
            sentences: segments.len(),
        });
    }
    let sentences: Vec<Sentence> = segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let mut s = Sentence::from_text(seg.text, labels.get(i).copied());
            s.span = Some(seg.span.clone());
            s
        })
        .collect();

    let max_sentences = max_sentences.max(1);
    if sentences.len() <= max_sentences {
        return Ok(vec![Section {
            doc_id: doc_id.into(),
            section_id: section_id.into(),
            sentences,
        }]);
    }
    Ok(sentences
        .chunks(max_sentences)
        .enumerate()
        .map(|(i, chunk)| Section {
            doc_id: doc_id.into(),
            section_id: format!("{section_id}.{}", i + 1),
            sentences: chunk.to_vec(),
        })
        .collect())
}
