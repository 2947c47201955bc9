use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

use super::shape::is_list_marker_shape;
use super::tokenize::is_list_marker;

/// Closed Penn-style tag set; every tag the tagger can emit is listed.
pub const POS_TAGS: [&str; 45] = [
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS", "PDT", "POS",
    "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT",
    "WP", "WP$", "WRB", ".", ",", ":", "``", "''", "-LRB-", "-RRB-", "#", "$",
];

/// A tag from [`POS_TAGS`], stored as its index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PosTag(u8);

impl PosTag {
    pub fn parse(tag: &str) -> Option<Self> {
        POS_TAGS.iter().position(|t| *t == tag).map(|i| PosTag(i as u8))
    }

    /// Panics if `tag` is not in [`POS_TAGS`].
    pub fn of(tag: &str) -> Self {
        Self::parse(tag).unwrap_or_else(|| panic!("unknown POS tag {tag:?}"))
    }

    pub fn as_str(self) -> &'static str {
        POS_TAGS[self.0 as usize]
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        (i < POS_TAGS.len()).then_some(PosTag(i as u8))
    }

    pub fn all() -> impl Iterator<Item = PosTag> {
        (0..POS_TAGS.len()).map(|i| PosTag(i as u8))
    }
}

impl fmt::Debug for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PosTag({})", self.as_str())
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PosTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PosTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PosTag::parse(&s).ok_or_else(|| de::Error::custom(format!("unknown POS tag {s:?}")))
    }
}

fn lexicon(lower: &str) -> Option<&'static str> {
    Some(match lower {
        "shall" | "will" | "may" | "must" | "can" | "should" | "would" | "could" | "might" | "ought" => "MD",
        "not" | "n't" | "never" => "RB",
        "no" | "the" | "a" | "an" | "this" | "that" | "these" | "those" | "any" | "each" | "every" | "some"
        | "either" | "neither" | "another" => "DT",
        "all" | "both" | "such" => "PDT",
        "and" | "or" | "but" | "nor" | "and/or" => "CC",
        "to" => "TO",
        "of" | "in" | "for" | "with" | "by" | "on" | "at" | "from" | "under" | "into" | "upon" | "within"
        | "without" | "prior" | "than" | "during" | "after" | "before" | "between" | "against" | "if"
        | "unless" | "until" | "because" | "whether" | "as" | "per" | "via" | "except" | "pursuant"
        | "notwithstanding" | "throughout" | "through" | "over" | "about" => "IN",
        "it" | "they" | "he" | "she" | "we" | "you" | "them" | "him" | "us" | "itself" | "themselves" => "PRP",
        "its" | "their" | "his" | "her" | "our" | "your" => "PRP$",
        "is" => "VBZ",
        "are" => "VBP",
        "be" => "VB",
        "been" => "VBN",
        "was" | "were" => "VBD",
        "being" => "VBG",
        "has" => "VBZ",
        "have" => "VBP",
        "had" => "VBD",
        "does" => "VBZ",
        "do" => "VBP",
        "which" => "WDT",
        "who" | "whom" => "WP",
        "whose" => "WP$",
        "where" | "when" | "how" | "why" => "WRB",
        "there" => "EX",
        "other" | "applicable" | "written" | "confidential" | "reasonable" | "necessary" | "relevant" | "third"
        | "due" | "prompt" | "entire" | "sole" | "own" | "full" | "such-like" => "JJ",
        "obliged" | "entitled" | "required" | "permitted" | "allowed" | "authorised" | "authorized" | "bound"
        | "prohibited" | "determined" | "governed" | "deemed" => "VBN",
        "only" | "also" | "directly" | "indirectly" | "promptly" | "immediately" | "otherwise" | "hereby"
        | "herein" | "thereof" | "hereof" | "hereunder" | "forthwith" | "always" | "then" => "RB",
        "one" | "two" | "three" | "four" | "five" | "six" | "seven" | "eight" | "nine" | "ten" | "thirty"
        | "sixty" | "ninety" | "fifth" => "CD",
        "agreement" | "party" | "supplier" | "provider" | "client" | "customer" | "contract" | "services"
        | "information" | "data" | "fees" | "term" | "notice" | "consent" => "NN",
        _ => return None,
    })
}

fn punct_tag(tok: &str) -> Option<&'static str> {
    Some(match tok {
        "." | "!" | "?" => ".",
        "," => ",",
        ":" | ";" | "-" | "--" | "..." => ":",
        "(" | "[" => "-LRB-",
        ")" | "]" => "-RRB-",
        "\"" | "“" | "‘" | "``" => "``",
        "”" | "’" | "''" => "''",
        "#" => "#",
        "$" | "€" | "£" => "$",
        _ => return None,
    })
}

fn suffix_tag(tok: &str, lower: &str) -> &'static str {
    if tok.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') && tok.chars().any(|c| c.is_ascii_digit()) {
        return "CD";
    }
    if !tok.chars().any(char::is_alphanumeric) {
        return "SYM";
    }
    let capitalized = tok.chars().next().is_some_and(char::is_uppercase);
    if capitalized {
        return if lower.ends_with('s') && lower.len() > 3 && !lower.ends_with("ss") {
            "NNPS"
        } else {
            "NNP"
        };
    }
    if lower.ends_with("'s") {
        return "NN";
    }
    if lower.ends_with("ly") {
        "RB"
    } else if lower.ends_with("ing") && lower.len() > 4 {
        "VBG"
    } else if lower.ends_with("ed") && lower.len() > 3 {
        "VBN"
    } else if ["tion", "ment", "ness", "ity", "ance", "ence", "ship", "er", "or"]
        .iter()
        .any(|s| lower.ends_with(s))
    {
        "NN"
    } else if ["ous", "ful", "able", "ible", "ive", "al", "ary", "ic"]
        .iter()
        .any(|s| lower.ends_with(s))
    {
        "JJ"
    } else if lower.ends_with('s') && !lower.ends_with("ss") && lower.len() > 3 {
        "NNS"
    } else {
        "NN"
    }
}

/// One tag per token.
///
/// With `given` tags the input passes through unchanged. Otherwise a
/// lexicon covers closed classes (modals, negations, determiners,
/// prepositions, auxiliaries) and frequent contract vocabulary, suffix rules
/// cover the rest (default `NN`), and a base-form verb is assumed directly
/// after a modal or `to` (optionally past a negation or adverb).
pub fn tag_pos(tokens: &[String], given: Option<&[PosTag]>) -> Vec<PosTag> {
    if let Some(tags) = given {
        return tags.to_vec();
    }
    let mut out: Vec<&'static str> = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        let lower = tok.to_lowercase();
        let tag = if is_list_marker(tok) || (i == 0 && is_list_marker_shape(tok) && tok.len() <= 4) {
            "LS"
        } else if let Some(t) = punct_tag(tok) {
            t
        } else if let Some(t) = lexicon(&lower) {
            if t == "NN" && tok.chars().next().is_some_and(char::is_uppercase) {
                "NNP"
            } else {
                t
            }
        } else {
            let prev = i.checked_sub(1).map(|j| out[j]);
            let prev2 = i.checked_sub(2).map(|j| out[j]);
            let after_verbal = matches!(prev, Some("MD" | "TO"))
                || (prev == Some("RB") && matches!(prev2, Some("MD" | "TO")));
            let base = suffix_tag(tok, &lower);
            if after_verbal && matches!(base, "NN" | "NNS" | "JJ" | "VBN") && !tok.chars().next().is_some_and(char::is_uppercase) {
                "VB"
            } else if i == 0 && matches!(base, "NNP" | "NNPS") {
                // sentence-initial capital says nothing about properness
                suffix_tag(&lower, &lower)
            } else {
                base
            }
        };
        out.push(tag);
    }
    out.into_iter().map(PosTag::of).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(words: &[&str]) -> Vec<&'static str> {
        let toks: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        tag_pos(&toks, None).into_iter().map(PosTag::as_str).collect()
    }

    #[test]
    fn closed_class_examples() {
        assert_eq!(tags(&["shall"]), ["MD"]);
        assert_eq!(tags(&["not"]), ["RB"]);
    }

    #[test]
    fn passthrough_keeps_given_tags() {
        let toks = vec!["shall".to_string(), "go".to_string()];
        let given = [PosTag::of("NN"), PosTag::of("SYM")];
        assert_eq!(tag_pos(&toks, Some(&given)), given);
    }

    #[test]
    fn verbs_after_modals() {
        assert_eq!(
            tags(&["The", "Supplier", "shall", "not", "transfer", "data", "."]),
            ["DT", "NNP", "MD", "RB", "VB", "NN", "."]
        );
        assert_eq!(tags(&["(a)", "only", "process", "the", "data", ";"]), ["LS", "RB", "NN", "DT", "NN", ":"]);
    }

    #[test]
    fn every_emitted_tag_is_in_the_set() {
        let words = ["Zyzzogeton", "13.3", "quickly", "running", "§", "(iv)", "£", "Parties", "’"];
        assert_eq!(tags(&words).len(), words.len());
    }
}
