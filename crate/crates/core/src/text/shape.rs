use serde::{Deserialize, Serialize};

/// Coarse orthographic class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenShape {
    AllCaps,
    InitCap,
    AllLower,
    AllDigits,
    MixedAlnum,
    Punct,
    ListMarker,
    Other,
}

impl TokenShape {
    pub const ALL: [TokenShape; 8] = [
        TokenShape::AllCaps,
        TokenShape::InitCap,
        TokenShape::AllLower,
        TokenShape::AllDigits,
        TokenShape::MixedAlnum,
        TokenShape::Punct,
        TokenShape::ListMarker,
        TokenShape::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            TokenShape::AllCaps => "ALL_CAPS",
            TokenShape::InitCap => "INIT_CAP",
            TokenShape::AllLower => "ALL_LOWER",
            TokenShape::AllDigits => "ALL_DIGITS",
            TokenShape::MixedAlnum => "MIXED_ALNUM",
            TokenShape::Punct => "PUNCT",
            TokenShape::ListMarker => "LIST_MARKER",
            TokenShape::Other => "OTHER",
        }
    }

    pub fn parse(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.key() == key)
    }
}

/// `\(?[a-z0-9ivx]{1,4}[).]`, matched on the whole token.
pub(crate) fn is_list_marker_shape(s: &str) -> bool {
    let body = s.strip_prefix('(').unwrap_or(s);
    let Some(inner) = body.strip_suffix(')').or_else(|| body.strip_suffix('.')) else {
        return false;
    };
    (1..=4).contains(&inner.len())
        && inner
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
}

/// Classifies a surface form. Pure function of its input.
///
/// Checked in order: list marker, all digits, no alphanumerics (punct),
/// letters mixed with digits, then letter case (digit-free tokens); anything
/// else is `Other`. A single capital letter counts as `InitCap`.
pub fn compute_shape(surface: &str) -> TokenShape {
    if surface.is_empty() {
        return TokenShape::Other;
    }
    if is_list_marker_shape(surface) {
        return TokenShape::ListMarker;
    }
    if surface.chars().all(|c| c.is_ascii_digit()) {
        return TokenShape::AllDigits;
    }
    let has_letter = surface.chars().any(char::is_alphabetic);
    let has_digit = surface.chars().any(char::is_numeric);
    if !has_letter && !has_digit {
        return TokenShape::Punct;
    }
    if has_letter && has_digit {
        return TokenShape::MixedAlnum;
    }
    if !has_letter {
        return TokenShape::Other;
    }
    let letters: Vec<char> = surface.chars().filter(|c| c.is_alphabetic()).collect();
    let upper = letters.iter().filter(|c| c.is_uppercase()).count();
    if upper == 0 {
        TokenShape::AllLower
    } else if upper == letters.len() && letters.len() >= 2 {
        TokenShape::AllCaps
    } else if upper == 1 && letters[0].is_uppercase() {
        TokenShape::InitCap
    } else {
        TokenShape::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenShape::*;

    #[test]
    fn examples() {
        assert_eq!(compute_shape("ABC"), AllCaps);
        assert_eq!(compute_shape("2018"), AllDigits);
        assert_eq!(compute_shape("Supplier"), InitCap);
        assert_eq!(compute_shape("shall"), AllLower);
        assert_eq!(compute_shape("(a)"), ListMarker);
        assert_eq!(compute_shape("(iii)"), ListMarker);
        assert_eq!(compute_shape("1."), ListMarker);
        assert_eq!(compute_shape("iv)"), ListMarker);
        assert_eq!(compute_shape(";"), Punct);
        assert_eq!(compute_shape("B2B"), MixedAlnum);
        assert_eq!(compute_shape("13.3"), Other);
        assert_eq!(compute_shape("McDonald"), Other);
        assert_eq!(compute_shape("Client's"), InitCap);
        assert_eq!(compute_shape("A"), InitCap);
    }

    #[test]
    fn keys_round_trip() {
        for s in TokenShape::ALL {
            assert_eq!(TokenShape::parse(s.key()), Some(s));
            assert_eq!(TokenShape::ALL[s.index()], s);
        }
    }
}
