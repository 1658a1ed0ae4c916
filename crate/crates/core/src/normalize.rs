//! Canonical text forms used for entity identity and relation labels.
//!
//! Two surfaces name the same entity exactly when their normalized forms
//! are equal, so every rule here is deterministic and idempotent.

use unicode_normalization::UnicodeNormalization;

/// Punctuation stripped from either end of a surface. Currency and section
/// signs are symbols, not punctuation, and survive.
const EDGE_PUNCT: &[char] = &[
    '.', ',', ';', ':', '!', '?', '"', '\'', '`', '(', ')', '[', ']', '{', '}', '-', '\u{2010}',
    '\u{2011}', '\u{2013}', '\u{2014}', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}', '\u{2026}',
    '*', '_', '/', '\\',
];

const BRACKETS: &[(char, char)] = &[('(', ')'), ('[', ']'), ('{', '}')];

/// Auxiliaries removed from the front of a relation label.
const AUX_PREFIXES: &[&str] = &["shall ", "will ", "is ", "was "];

/// Canonical form of an entity surface: NFC, case-folded, whitespace
/// collapsed, edge punctuation stripped. Corporate suffixes are kept.
pub fn normalize_text(raw: &str) -> String {
    let folded: String = raw.nfc().flat_map(char::to_lowercase).collect::<String>().nfc().collect();
    let mut out = collapse_whitespace(&folded);
    loop {
        let stripped = strip_edges(&out);
        if stripped == out {
            return out;
        }
        out = stripped;
    }
}

/// Normalized relation label: `normalize_text` followed by removal of a
/// leading auxiliary ("shall pay" and "will pay" both become "pay"). A label
/// that is only an auxiliary keeps it.
pub fn normalize_label(raw: &str) -> String {
    let mut label = normalize_text(raw);
    loop {
        let Some(rest) = AUX_PREFIXES.iter().find_map(|p| label.strip_prefix(p)) else {
            return label;
        };
        let rest = rest.trim_start().to_string();
        if rest.is_empty() {
            return label;
        }
        label = rest;
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_edges(s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    while let Some(&last) = chars.last() {
        if !EDGE_PUNCT.contains(&last) || closes_balanced(&chars, last) {
            break;
        }
        chars.pop();
    }
    let mut start = 0;
    while start < chars.len() {
        let c = chars[start];
        if !EDGE_PUNCT.contains(&c) || opens_balanced(&chars[start..], c) {
            break;
        }
        start += 1;
    }
    let kept: String = chars[start..].iter().collect();
    kept.trim().to_string()
}

fn closes_balanced(chars: &[char], close: char) -> bool {
    match BRACKETS.iter().find(|(_, c)| *c == close) {
        Some((open, _)) => bracket_depth(&chars[..chars.len() - 1], *open, close) > 0,
        None => false,
    }
}

fn opens_balanced(chars: &[char], open: char) -> bool {
    match BRACKETS.iter().find(|(o, _)| *o == open) {
        Some((_, close)) => chars[1..].contains(close),
        None => false,
    }
}

fn bracket_depth(chars: &[char], open: char, close: char) -> i32 {
    chars.iter().fold(0, |d, &c| {
        if c == open {
            d + 1
        } else if c == close {
            d - 1
        } else {
            d
        }
    })
}
