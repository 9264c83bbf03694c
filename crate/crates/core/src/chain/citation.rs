use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CitationKind {
    /// `E<n>`: the n-th evidence item.
    Evidence,
    /// `C<n>`: the n-th subclaim block.
    Subclaim,
}

/// A reference token such as `E2` or `C1` found in step text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub kind: CitationKind,
    pub index: u32,
    /// Character (not byte) offsets of the literal token within the scanned text.
    pub span: Range<usize>,
}

impl std::fmt::Display for Citation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let prefix = match self.kind {
            CitationKind::Evidence => 'E',
            CitationKind::Subclaim => 'C',
        };
        write!(f, "{prefix}{}", self.index)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Extracts every `E<digits>` / `C<digits>` token that stands as a whole word.
///
/// Order of appearance is preserved and duplicates are kept. Tokens whose
/// number does not fit in `u32` are skipped.
pub fn extract_citations(text: &str) -> Vec<Citation> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let kind = match c {
            'E' => Some(CitationKind::Evidence),
            'C' => Some(CitationKind::Subclaim),
            _ => None,
        };
        let at_boundary = i == 0 || !is_word_char(chars[i - 1]);
        let Some(kind) = kind.filter(|_| at_boundary) else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        let has_digits = j > i + 1;
        let closed = j == chars.len() || !is_word_char(chars[j]);
        if has_digits && closed {
            let digits: String = chars[i + 1..j].iter().collect();
            if let Ok(index) = digits.parse::<u32>() {
                out.push(Citation {
                    kind,
                    index,
                    span: i..j,
                });
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}
