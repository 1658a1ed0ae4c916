//! Deterministic pattern extractor in the OpenIE style.
//!
//! Within each clause, relation triggers (modal obligations, holdings,
//! prepositional authority phrases, legal verbs) split the text into a
//! subject region and an object region. Each recognized mention in the
//! object region yields one triple; without mentions the object is the
//! noun phrase up to the first preposition.

use once_cell::sync::Lazy;
use regex::Regex;

use super::RawTriple;
use crate::graph::Span;
use crate::ner::{recognize_entities, EntityMention};

static MODAL: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(?:shall|will|must|may)\s+(?:not\s+)?(?:be\s+[a-z]+(?:\s+(?:for|to|by|with))?|[a-z]+)\b")
        .unwrap()
});

static OBLIGATION: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(?:(?:is|are)\s+(?:obligated|required|entitled|permitted)\s+to|agree[sd]?\s+to)\s+[a-z]+\b")
        .unwrap()
});

static HOLDING: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(?:held|holds|found|finds|concluded|concludes|ruled|rules|determined|determines)\s+that\b")
        .unwrap()
});

static PREPOSITIONAL: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?i)\b(?:pursuant\s+to|subject\s+to|in\s+accordance\s+with)\b").unwrap()
});

static VERB: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)\b(?:affirmed|reversed|vacated|remanded|granted|denied|dismissed|awarded|filed|entered|issued|cited|relied\s+on|appealed|sued|leases|leased|pays|paid|owes|owed|owns|guarantees|guaranteed|signed|executed|authored|delivered|represented|joined|dissented|concurred|enacted|amended|governs|commences|expires|terminates|insures|manages|brought|applied|adopted|overruled|presided\s+over|arose\s+from)\b",
    )
    .unwrap()
});

static COPULA: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)\b(?:is|was|are|were)\b").unwrap());

const ABBREVIATIONS: &[&str] = &[
    "mr", "ms", "mrs", "dr", "hon", "jr", "sr", "st", "no", "v", "vs", "ct", "ed", "supp", "app",
    "cir", "dist", "civ", "rptr", "cal", "sec", "art", "mt", "ave", "blvd", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "e.g", "i.e", "cf", "al",
];

const PREPOSITIONS: &[&str] = &[
    "on", "in", "at", "by", "for", "to", "of", "within", "under", "from", "with", "upon", "after",
    "before", "during", "until", "as", "into", "against", "without", "per", "if", "when", "unless",
];

const FUNCTION_WORDS: &[&str] = &[
    "the", "a", "an", "and", "or", "that", "which", "who", "it", "this", "such", "each", "any",
    "not", "also", "then", "thereafter", "further",
];

/// Subject regions are cut after the last of these.
const SUBJECT_CUTS: &[&str] = &[" that ", " which ", " who ", " and ", " but ", " because ", " when ", " if "];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TriggerKind {
    Verb,
    Prepositional,
}

#[derive(Debug, Clone, Copy)]
struct Trigger {
    start: usize,
    end: usize,
    kind: TriggerKind,
}

/// Byte ranges of the sentences of `doc`, trimmed of surrounding space.
pub fn split_sentences(doc: &str) -> Vec<(usize, usize)> {
    let mentions = recognize_entities(doc);
    split_with_mentions(doc, &mentions)
}

fn split_with_mentions(doc: &str, mentions: &[EntityMention]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = doc.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let boundary = match c {
            b'.' | b'!' | b'?' => is_terminal(doc, mentions, i),
            b'\n' => doc[i + 1..].starts_with('\n') || doc[i + 1..].trim_start_matches([' ', '\t']).starts_with('\n'),
            _ => false,
        };
        if boundary {
            push_trimmed(doc, start, i + 1, &mut out);
            start = i + 1;
        }
        i += 1;
    }
    push_trimmed(doc, start, doc.len(), &mut out);
    out
}

fn push_trimmed(doc: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let slice = &doc[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() && trimmed.chars().any(char::is_alphanumeric) {
        out.push((start + lead, start + lead + trimmed.len()));
    }
}

fn is_terminal(doc: &str, mentions: &[EntityMention], pos: usize) -> bool {
    let rest = &doc[pos + 1..];
    let Some(next) = rest.chars().next() else { return true };
    if !next.is_whitespace() && next != '"' && next != '\u{201D}' && next != ')' {
        return false;
    }
    let Some(first) = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '"' || c == '\u{201D}' || c == ')').chars().next() else {
        return true;
    };
    if first.is_lowercase() {
        return false;
    }
    if let Some(m) = mentions.iter().find(|m| m.bytes.0 <= pos && pos < m.bytes.1) {
        return pos + 1 == m.bytes.1;
    }
    if doc.as_bytes()[pos] == b'.' {
        let word: String = doc[..pos]
            .chars()
            .rev()
            .take_while(|c| c.is_alphabetic() || *c == '.')
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        let lower = word.to_lowercase();
        if ABBREVIATIONS.contains(&lower.as_str()) {
            return false;
        }
        if word.chars().count() == 1 && word.chars().all(char::is_uppercase) {
            return false;
        }
    }
    true
}

/// Extracts triples in document order.
pub fn extract_builtin(doc: &str) -> Vec<RawTriple> {
    let mentions = recognize_entities(doc);
    let mut out = Vec::new();
    let mut chars = CharCounter::new(doc);
    for (s_start, s_end) in split_with_mentions(doc, &mentions) {
        let span = Span { start: chars.at(s_start), end: chars.at(s_end) };
        for (c_start, c_end) in clauses(doc, &mentions, s_start, s_end) {
            extract_clause(doc, &mentions, c_start, c_end, span, &mut out);
        }
    }
    out
}

fn clauses(doc: &str, mentions: &[EntityMention], start: usize, end: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut cur = start;
    for (off, ch) in doc[start..end].char_indices() {
        let pos = start + off;
        if ch == ';' && !inside_mention(mentions, pos) {
            out.push((cur, pos));
            cur = pos + 1;
        }
    }
    out.push((cur, end));
    out
}

fn inside_mention(mentions: &[EntityMention], pos: usize) -> bool {
    mentions.iter().any(|m| m.bytes.0 <= pos && pos < m.bytes.1)
}

fn overlaps_mention(mentions: &[EntityMention], start: usize, end: usize) -> bool {
    mentions.iter().any(|m| m.bytes.0 < end && start < m.bytes.1)
}

fn find_triggers(doc: &str, mentions: &[EntityMention], start: usize, end: usize) -> Vec<Trigger> {
    let text = &doc[start..end];
    let mut cands: Vec<Trigger> = Vec::new();
    for (re, kind) in [
        (&*MODAL, TriggerKind::Verb),
        (&*OBLIGATION, TriggerKind::Verb),
        (&*HOLDING, TriggerKind::Verb),
        (&*PREPOSITIONAL, TriggerKind::Prepositional),
        (&*VERB, TriggerKind::Verb),
    ] {
        for m in re.find_iter(text) {
            cands.push(Trigger { start: start + m.start(), end: start + m.end(), kind });
        }
    }
    if cands.is_empty() {
        for m in COPULA.find_iter(text) {
            cands.push(Trigger { start: start + m.start(), end: start + m.end(), kind: TriggerKind::Verb });
        }
    }
    cands.retain(|t| !overlaps_mention(mentions, t.start, t.end));
    cands.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut accepted: Vec<Trigger> = Vec::new();
    for t in cands {
        if accepted.last().is_some_and(|p| t.start < p.end) {
            continue;
        }
        accepted.push(t);
    }
    accepted
}

fn extract_clause(
    doc: &str,
    mentions: &[EntityMention],
    start: usize,
    end: usize,
    span: Span,
    out: &mut Vec<RawTriple>,
) {
    let triggers = find_triggers(doc, mentions, start, end);
    let mut subject: Option<String> = None;
    let mut prev_end = start;
    for (k, t) in triggers.iter().enumerate() {
        let region_subject = subject_phrase(doc, mentions, prev_end, t.start);
        let subj = match t.kind {
            TriggerKind::Prepositional => subject.clone().or(region_subject),
            TriggerKind::Verb => region_subject.or_else(|| subject.clone()),
        };
        let object_end = triggers.get(k + 1).map_or(end, |n| n.start);
        prev_end = t.end;
        let Some(subj) = subj else { continue };
        subject = Some(subj.clone());
        let label = collapse(&doc[t.start..t.end]);
        let objects = object_phrases(doc, mentions, t.end, object_end);
        for obj in objects {
            out.push(RawTriple { subject: subj.clone(), relation: label.clone(), object: obj, span: Some(span) });
        }
    }
}

fn subject_phrase(doc: &str, mentions: &[EntityMention], start: usize, end: usize) -> Option<String> {
    if start >= end {
        return None;
    }
    // Cut after the last comma that is not inside a mention.
    let mut cut = start;
    for (off, ch) in doc[start..end].char_indices() {
        let pos = start + off;
        if ch == ',' && !inside_mention(mentions, pos) {
            cut = pos + 1;
        }
    }
    let mut region = &doc[cut..end];
    let lower = region.to_lowercase();
    if let Some(idx) = SUBJECT_CUTS.iter().filter_map(|c| lower.rfind(c).map(|i| i + c.len())).max() {
        if !overlaps_mention(mentions, cut + idx - 1, cut + idx) {
            region = &region[idx..];
        }
    }
    let phrase = collapse(region.trim_matches(|c: char| !c.is_alphanumeric() && c != '$' && c != '§' && c != '.'));
    let phrase = phrase.trim_end_matches(['.', ',']).to_string();
    if !contentful(&phrase) {
        return None;
    }
    let has_mention = mentions.iter().any(|m| m.bytes.0 >= cut && m.bytes.1 <= end);
    let words: Vec<&str> = phrase.split(' ').collect();
    if !has_mention && words.len() > 6 {
        return Some(words[words.len() - 3..].join(" "));
    }
    Some(phrase)
}

fn object_phrases(doc: &str, mentions: &[EntityMention], start: usize, end: usize) -> Vec<String> {
    let inside: Vec<String> = mentions
        .iter()
        .filter(|m| m.bytes.0 >= start && m.bytes.1 <= end)
        .map(|m| m.entity.surface.clone())
        .collect();
    if !inside.is_empty() {
        return inside;
    }
    let region = doc[start..end].trim();
    let mut words = Vec::new();
    for raw in region.split_whitespace() {
        let w = raw.trim_end_matches([',', '.', ';', ':', ')', '"']);
        let lower = w.to_lowercase();
        if !words.is_empty() && PREPOSITIONS.contains(&lower.as_str()) {
            break;
        }
        if !w.is_empty() {
            words.push(w);
        }
        if w.len() != raw.len() && raw.ends_with(',') {
            break;
        }
    }
    let phrase = words.join(" ");
    if contentful(&phrase) {
        vec![phrase]
    } else {
        Vec::new()
    }
}

fn contentful(phrase: &str) -> bool {
    phrase
        .split_whitespace()
        .any(|w| w.chars().any(char::is_alphanumeric) && !FUNCTION_WORDS.contains(&w.to_lowercase().as_str()))
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct CharCounter<'a> {
    doc: &'a str,
    byte: usize,
    chars: usize,
}

impl<'a> CharCounter<'a> {
    fn new(doc: &'a str) -> Self {
        CharCounter { doc, byte: 0, chars: 0 }
    }

    fn at(&mut self, byte: usize) -> usize {
        if byte < self.byte {
            self.byte = 0;
            self.chars = 0;
        }
        self.chars += self.doc[self.byte..byte].chars().count();
        self.byte = byte;
        self.chars
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::normalize_text;

    fn norm(triples: &[RawTriple]) -> Vec<(String, String, String)> {
        triples
            .iter()
            .map(|t| (normalize_text(&t.subject), normalize_text(&t.relation), normalize_text(&t.object)))
            .collect()
    }

    fn t(s: &str, r: &str, o: &str) -> (String, String, String) {
        (s.to_string(), r.to_string(), o.to_string())
    }

    #[test]
    fn rent_obligation() {
        let got = extract_builtin("Tenant shall pay rent on the first business day of each month.");
        assert_eq!(norm(&got), vec![t("tenant", "shall pay", "rent")]);
    }

    #[test]
    fn maintenance_golden() {
        let got = extract_builtin("Landlord shall maintain the premises.");
        assert_eq!(norm(&got), vec![t("landlord", "shall maintain", "the premises")]);
        assert_eq!(got[0].span, Some(Span { start: 0, end: 37 }));
    }

    #[test]
    fn empty_and_sparse() {
        assert!(extract_builtin("").is_empty());
        assert!(extract_builtin("Yes, definitely so.").is_empty());
    }

    #[test]
    fn mentions_become_objects() {
        let doc = "Harbor Coffee Inc. shall pay Base Rent of $12,500 pursuant to Section 4.1.";
        assert_eq!(
            norm(&extract_builtin(doc)),
            vec![
                t("harbor coffee inc", "shall pay", "base rent"),
                t("harbor coffee inc", "shall pay", "$12,500"),
                t("harbor coffee inc", "pursuant to", "section 4.1"),
            ]
        );
    }

    #[test]
    fn holding_with_case_name() {
        let doc = "In Smith v. Jones, 500 U.S. 123 (1995), the Court held that the statute was void.";
        let got = norm(&extract_builtin(doc));
        assert_eq!(got, vec![t("the court", "held that", "the statute was void")]);
    }

    #[test]
    fn sentences_respect_abbreviations() {
        let doc = "Mr. Daniel Reyes signed it. See Smith v. Jones, 500 U.S. 123 (1995). Rent is \
                   due to Parkview Realty Inc. Tenant shall pay.";
        let spans = split_sentences(doc);
        let sentences: Vec<&str> = spans.iter().map(|&(s, e)| &doc[s..e]).collect();
        assert_eq!(
            sentences,
            vec![
                "Mr. Daniel Reyes signed it.",
                "See Smith v. Jones, 500 U.S. 123 (1995).",
                "Rent is due to Parkview Realty Inc.",
                "Tenant shall pay.",
            ]
        );
    }

    #[test]
    fn deterministic_output() {
        let doc = "The Court affirmed the judgment on June 4, 2019. Landlord shall repair the roof.";
        assert_eq!(extract_builtin(doc), extract_builtin(doc));
    }
}
