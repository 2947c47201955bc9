const LEADING: &[char] = &['(', '[', '"', '“', '‘'];
const TRAILING: &[char] = &['.', ',', ';', ':', ')', ']', '!', '?', '"', '”', '’'];

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "inc.", "ltd.", "co.", "corp.", "no.", "nos.", "art.", "arts.", "sec.", "para.",
    "cl.", "mr.", "mrs.", "ms.", "dr.", "vs.", "v.", "st.", "jr.", "approx.", "incl.", "p.", "pp.",
];

pub(crate) fn is_abbreviation(word: &str) -> bool {
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    // dotted initialisms such as "U.S." or "e.g."
    let body = lower.trim_end_matches('.');
    body.contains('.')
        && body
            .split('.')
            .all(|p| p.chars().count() == 1 && p.chars().all(char::is_alphabetic))
}

/// `(a)`, `(iv)`, `(12)`, `(A)`, `a)`, `1)` as whole words.
pub(crate) fn is_list_marker(word: &str) -> bool {
    let (inner, paren) = match word.strip_prefix('(') {
        Some(rest) => (rest.strip_suffix(')'), true),
        None => (word.strip_suffix(')'), false),
    };
    let Some(inner) = inner else { return false };
    let n = inner.chars().count();
    if n == 0 {
        return false;
    }
    let all = |f: fn(&char) -> bool| inner.chars().all(|c| f(&c));
    if all(char::is_ascii_digit) {
        return n <= if paren { 3 } else { 2 };
    }
    if !paren {
        return n == 1 && all(char::is_ascii_lowercase);
    }
    (n <= 2 && all(char::is_ascii_lowercase))
        || (n == 1 && all(char::is_ascii_uppercase))
        || (n <= 6 && inner.chars().all(|c| "ivxlcIVXLC".contains(c)))
}

/// Splits a sentence into surface tokens.
///
/// Whitespace first; then brackets, quotes and trailing punctuation are
/// detached, except that list markers like `(a)` stay whole, abbreviations
/// keep their final period and internal periods (`13.3`) are preserved.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in sentence.split_whitespace() {
        if is_list_marker(word) {
            out.push(word.to_string());
            continue;
        }
        let mut rest = word;
        while let Some(c) = rest.chars().next().filter(|c| LEADING.contains(c)) {
            if is_list_marker(rest) {
                break;
            }
            out.push(c.to_string());
            rest = &rest[c.len_utf8()..];
        }
        let mut trailing = Vec::new();
        while let Some(c) = rest.chars().last().filter(|c| TRAILING.contains(c)) {
            if is_list_marker(rest) || (c == '.' && is_abbreviation(rest)) {
                break;
            }
            trailing.push(c.to_string());
            rest = &rest[..rest.len() - c.len_utf8()];
        }
        if !rest.is_empty() {
            out.push(rest.to_string());
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn examples() {
        assert_eq!(toks("shall not:"), ["shall", "not", ":"]);
        assert_eq!(toks("(a) only process"), ["(a)", "only", "process"]);
        assert_eq!(toks("Clauses 13.3;"), ["Clauses", "13.3", ";"]);
    }

    #[test]
    fn brackets_quotes_and_abbreviations() {
        assert_eq!(toks("(the \"Services\")."), ["(", "the", "\"", "Services", "\"", ")", "."]);
        assert_eq!(toks("e.g. fees"), ["e.g.", "fees"]);
        assert_eq!(toks("Agreement."), ["Agreement", "."]);
        assert_eq!(toks("(iii) not"), ["(iii)", "not"]);
        assert_eq!(toks("Client's"), ["Client's"]);
    }

    #[test]
    fn list_marker_forms() {
        for m in ["(a)", "(iv)", "(12)", "(A)", "a)", "1)"] {
            assert!(is_list_marker(m), "{m}");
        }
        for m in ["(abc)", "(the", "Services)", "()", "(1234)"] {
            assert!(!is_list_marker(m), "{m}");
        }
    }
}
