use std::ops::Range;

use super::tokenize::{is_abbreviation, is_list_marker};

/// One sentence or clause of a section, with its byte span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<'a> {
    pub text: &'a str,
    pub span: Range<usize>,
}

struct Word<'a> {
    text: &'a str,
    start: usize,
    end: usize,
}

fn words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Word { text: &text[s..i], start: s, end: i });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Word { text: &text[s..], start: s, end: text.len() });
    }
    out
}

fn strip_closers(w: &str) -> &str {
    w.trim_end_matches(['"', '”', '’', ')', ']'])
}

/// A word that can end a sentence when followed by a suitable opener.
fn ends_sentence(w: &str) -> bool {
    if is_list_marker(w) {
        return false;
    }
    let core = strip_closers(w);
    match core.chars().last() {
        Some('!') | Some('?') => true,
        Some('.') => {
            let body = core.trim_start_matches(['(', '"', '“']);
            let is_initial = {
                let mut cs = body.chars();
                matches!((cs.next(), cs.next(), cs.next()), (Some(c), Some('.'), None) if c.is_uppercase())
            };
            !is_abbreviation(body) && !is_initial
        }
        _ => false,
    }
}

fn opens_sentence(w: &str) -> bool {
    w.chars()
        .next()
        .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit() || "(\"“‘'[".contains(c))
}

fn ends_with_any(w: &str, chars: &[char]) -> bool {
    w.chars().last().is_some_and(|c| chars.contains(&c))
}

/// Splits section text into sentences and clauses.
///
/// Plain sentences end at `.`, `!` or `?` followed by an upper-case or
/// bracketed opener, with guards for abbreviations and initials. A clause
/// list opens when a word ending in `:` is followed by a marker such as
/// `(a)`, `(i)` or `(1)`; while it is open, every marker that follows a
/// `;`, `,` or `:` (optionally with a trailing "and"/"or") starts a new
/// segment. The list closes at the next sentence end.
///
/// Segments are trimmed; only whitespace lies between consecutive spans.
pub fn split_sentences(text: &str) -> Vec<Segment<'_>> {
    let ws = words(text);
    let mut starts = Vec::new();
    let mut list_open = false;
    for k in 0..ws.len() {
        if k == 0 {
            starts.push(0);
            continue;
        }
        let prev = ws[k - 1].text;
        let cur = ws[k].text;
        let marker = is_list_marker(cur);
        let mut boundary = false;
        if ends_with_any(prev, &[':']) && marker {
            list_open = true;
            boundary = true;
        } else if list_open && marker {
            let after_separator = ends_with_any(prev, &[';', ',', ':'])
                || (matches!(prev.to_lowercase().as_str(), "and" | "or" | "and/or")
                    && k >= 2
                    && ends_with_any(ws[k - 2].text, &[';', ',']));
            boundary = after_separator || ends_sentence(prev);
        } else if ends_sentence(prev) && opens_sentence(cur) {
            list_open = false;
            boundary = true;
        }
        if boundary {
            starts.push(k);
        }
    }
    starts
        .iter()
        .enumerate()
        .map(|(i, &first)| {
            let last = starts.get(i + 1).map_or(ws.len(), |&n| n) - 1;
            let span = ws[first].start..ws[last].end;
            Segment { text: &text[span.clone()], span }
        })
        .collect()
}
