//! Rule-based recognizer for legal entities: reporter citations, statutory
//! and contractual provisions, dates, money, and capitalized names.
//!
//! Candidates from every rule family are resolved left to right; at a given
//! start the longest candidate wins, and a candidate that overlaps an
//! already accepted mention is dropped.

use std::collections::BTreeSet;
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;

use crate::error::ExtractError;
use crate::graph::{Entity, EntityKey, EntityType, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub entity: Entity,
    /// Character offsets into the source text.
    pub span: Span,
    /// Byte offsets of the same range.
    pub bytes: (usize, usize),
}

const REPORTER: &str = r"(?:U\.\s?S\.|S\.\s?Ct\.|L\.\s?Ed\.(?:\s?2d)?|F\.\s?Supp\.(?:\s?(?:2d|3d))?|F\.\s?App'x|F\.\s?(?:2d|3d|4th)|F\.|N\.E\.(?:\s?(?:2d|3d))?|N\.W\.(?:\s?2d)?|S\.E\.(?:\s?2d)?|S\.W\.(?:\s?(?:2d|3d))?|So\.\s?(?:2d|3d)|P\.\s?(?:2d|3d)|A\.\s?(?:2d|3d)|Cal\.\s?Rptr\.(?:\s?(?:2d|3d))?|B\.R\.)";

const MONTH: &str = r"(?:January|February|March|April|May|June|July|August|September|October|November|December|Jan\.|Feb\.|Mar\.|Apr\.|Jun\.|Jul\.|Aug\.|Sept\.|Sep\.|Oct\.|Nov\.|Dec\.)";

static CITATION: Lazy<Regex> = Lazy::new(|| {
    Regex::new(&format!(
        r"\b\d{{1,4}}\s+{REPORTER}\s+\d{{1,5}}(?:,\s*\d{{1,5}})?(?:\s+\((?:[A-Za-z0-9.' ]{{0,40}}\s)?\d{{4}}\))?"
    ))
    .unwrap()
});

static PROVISION: Lazy<Vec<Regex>> = Lazy::new(|| {
    [
        r"\b\d{1,3}\s+U\.S\.C\.(?:A\.)?\s+§§?\s*\d+[a-z]?(?:\([A-Za-z0-9]+\))*",
        r"\b(?:[A-Z][a-z]*\.\s){1,3}Code\s+§§?\s*\d+(?:\.\d+)*(?:\([A-Za-z0-9]+\))*",
        r"\b(?:Sections?|Sec\.|Articles?|Paragraphs?|Clauses?|Rules?)\s+\d+(?:\.\d+)*[a-z]?(?:\([A-Za-z0-9]+\))*",
        r"\bArticles?\s+[IVXLC]+\b",
        r"§§?\s*\d+(?:\.\d+)*[a-z]?(?:\([A-Za-z0-9]+\))*",
    ]
    .iter()
    .map(|p| Regex::new(p).unwrap())
    .collect()
});

static DATE: Lazy<Vec<Regex>> = Lazy::new(|| {
    [
        format!(r"\b{MONTH}\s+\d{{1,2}}(?:st|nd|rd|th)?,?\s+\d{{4}}\b"),
        format!(r"\b\d{{1,2}}(?:st|nd|rd|th)?\s+(?:day\s+of\s+)?{MONTH},?\s+\d{{4}}\b"),
        format!(r"\b{MONTH}\s+\d{{4}}\b"),
        r"\b\d{1,2}/\d{1,2}/\d{4}\b".to_string(),
        r"\b\d{4}-\d{2}-\d{2}\b".to_string(),
    ]
    .iter()
    .map(|p| Regex::new(p).unwrap())
    .collect()
});

static YEAR: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b(?:1[89]|20)\d{2}\b").unwrap());

static MONEY: Lazy<Vec<Regex>> = Lazy::new(|| {
    [
        r"\$\s?\d{1,3}(?:,\d{3})+(?:\.\d{2})?(?:\s(?:million|billion|thousand)\b)?",
        r"\$\s?\d+(?:\.\d{2})?(?:\s(?:million|billion|thousand)\b)?",
        r"\b\d{1,3}(?:,\d{3})*(?:\.\d{2})?\s(?:dollars|USD)\b",
        r"\bUSD\s?\d{1,3}(?:,\d{3})*(?:\.\d{2})?",
    ]
    .iter()
    .map(|p| Regex::new(p).unwrap())
    .collect()
});

static TOKEN: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"(?:\p{Lu}\.){2,}|\p{L}[\p{L}'\u{2019}\-]*\.?|\d+|&|[^\s\p{L}\d]").unwrap()
});

/// Words whose trailing period is part of the word.
const ABBREVIATIONS: &[&str] = &[
    "Mr", "Ms", "Mrs", "Dr", "Hon", "Jr", "Sr", "St", "Inc", "Corp", "Co", "Ltd", "No", "v", "vs",
    "Ct", "Ed", "Supp", "App", "Cir", "Dist", "Civ", "Rptr", "Cal", "Sec", "Art", "Mt", "Ave",
    "Blvd", "Bros", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov",
    "Dec",
];

const CORPORATE_SUFFIXES: &[&str] = &[
    "llc", "l.l.c", "inc", "corp", "corporation", "co", "company", "ltd", "llp", "l.l.p", "lp",
    "l.p", "n.a", "plc", "holdings", "group", "partners", "associates", "trust", "bancorp",
];

const INSTITUTION_WORDS: &[&str] = &[
    "court", "circuit", "department", "agency", "commission", "board", "university", "bank",
    "association", "committee", "authority", "bureau", "office", "tribunal",
];

const HONORIFICS: &[&str] = &["mr", "ms", "mrs", "dr", "hon", "judge", "justice", "professor"];

const LOCATIONS: &[&str] = &[
    "alabama", "alaska", "arizona", "arkansas", "california", "colorado", "connecticut",
    "delaware", "florida", "georgia", "hawaii", "idaho", "illinois", "indiana", "iowa", "kansas",
    "kentucky", "louisiana", "maine", "maryland", "massachusetts", "michigan", "minnesota",
    "mississippi", "missouri", "montana", "nebraska", "nevada", "new hampshire", "new jersey",
    "new mexico", "new york", "north carolina", "north dakota", "ohio", "oklahoma", "oregon",
    "pennsylvania", "rhode island", "south carolina", "south dakota", "tennessee", "texas", "utah",
    "vermont", "virginia", "washington", "west virginia", "wisconsin", "wyoming",
    "united states", "district of columbia", "san diego", "los angeles", "san francisco",
    "sacramento", "seattle", "portland", "denver", "phoenix", "chicago", "boston", "austin",
    "houston", "dallas", "miami", "atlanta", "philadelphia", "pittsburgh", "baltimore",
    "minneapolis", "new orleans", "cleveland", "detroit", "tucson", "spokane", "boise",
    "salt lake city", "albuquerque", "omaha", "richmond", "charlotte", "nashville", "oakland",
];

const LOCATION_HEADS: &[&str] = &["county", "city", "township", "parish"];

/// Capitalized words that never start a name (sentence openers, pronouns,
/// prepositions, bare role words).
const STOPWORDS: &[&str] = &[
    "the", "this", "that", "these", "those", "a", "an", "in", "on", "at", "by", "for", "from",
    "to", "with", "within", "without", "under", "upon", "pursuant", "if", "when", "where", "while",
    "as", "after", "before", "during", "each", "all", "any", "no", "such", "neither", "either",
    "both", "notwithstanding", "except", "following", "it", "we", "they", "he", "she", "our",
    "its", "their", "his", "her", "yes", "see", "cf", "accordingly", "however", "thus", "here",
    "there", "whereas", "because", "although", "unless", "until", "what", "which", "who", "whom",
    "when", "why", "how", "did", "does", "do", "is", "was", "are", "were", "can", "could", "should",
    "would", "will", "shall", "may", "must", "and", "or", "but", "nor", "not", "also", "then",
    "only", "every", "some", "one", "two", "three", "per", "via", "about", "between", "among",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Family {
    Supplemental,
    Citation,
    Provision,
    Money,
    Date,
    Name,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    start: usize,
    end: usize,
    etype: EntityType,
    family: Family,
}

/// Compiled rule set. `Recognizer::default()` holds only the built-in rules.
#[derive(Debug, Default, Clone)]
pub struct Recognizer {
    supplemental: Vec<(Regex, EntityType)>,
}

static DEFAULT: Lazy<Recognizer> = Lazy::new(Recognizer::default);

pub fn recognize_entities(doc: &str) -> Vec<EntityMention> {
    DEFAULT.recognize(doc)
}

/// Deduplicated `(normalized, type)` keys of the mentions in `doc`.
pub fn entity_set(doc: &str) -> BTreeSet<EntityKey> {
    DEFAULT.entity_set(doc)
}

impl Recognizer {
    /// Adds patterns from a file with one `TYPE REGEX` pair per line; blank
    /// lines and lines starting with `#` are skipped.
    pub fn with_pattern_file(path: &Path) -> Result<Recognizer, ExtractError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ExtractError::Io { path: path.display().to_string(), source })?;
        Recognizer::default().with_patterns(&text)
    }

    pub fn with_patterns(mut self, text: &str) -> Result<Recognizer, ExtractError> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, pattern) = line.split_once(char::is_whitespace).ok_or_else(|| {
                ExtractError::Pattern { line: idx + 1, message: "expected `TYPE REGEX`".into() }
            })?;
            let re = Regex::new(pattern.trim())
                .map_err(|e| ExtractError::Pattern { line: idx + 1, message: e.to_string() })?;
            self.supplemental.push((re, EntityType::from_label(label)));
        }
        Ok(self)
    }

    pub fn entity_set(&self, doc: &str) -> BTreeSet<EntityKey> {
        self.recognize(doc).into_iter().map(|m| m.entity.key()).collect()
    }

    pub fn recognize(&self, doc: &str) -> Vec<EntityMention> {
        if doc.is_empty() {
            return Vec::new();
        }
        let mut cands = Vec::new();
        for (re, etype) in &self.supplemental {
            push_matches(&mut cands, re, doc, *etype, Family::Supplemental);
        }
        push_matches(&mut cands, &CITATION, doc, EntityType::Citation, Family::Citation);
        for re in PROVISION.iter() {
            push_matches(&mut cands, re, doc, EntityType::Provision, Family::Provision);
        }
        for re in MONEY.iter() {
            push_matches(&mut cands, re, doc, EntityType::Money, Family::Money);
        }
        for re in DATE.iter() {
            push_matches(&mut cands, re, doc, EntityType::Date, Family::Date);
        }
        for m in YEAR.find_iter(doc) {
            if standalone_number(doc, m.start(), m.end()) {
                cands.push(Candidate {
                    start: m.start(),
                    end: m.end(),
                    etype: EntityType::Date,
                    family: Family::Date,
                });
            }
        }
        name_candidates(doc, &mut cands);

        cands.sort_by(|a, b| {
            a.start.cmp(&b.start).then(b.end.cmp(&a.end)).then(a.family.cmp(&b.family))
        });
        // User patterns take precedence; the rest resolve left to right.
        let mut accepted: Vec<Candidate> = Vec::new();
        for c in cands.iter().filter(|c| c.family == Family::Supplemental && c.end > c.start) {
            if !accepted.iter().any(|a| c.start < a.end && a.start < c.end) {
                accepted.push(*c);
            }
        }
        let pinned = accepted.len();
        for c in cands.iter().filter(|c| c.family != Family::Supplemental && c.end > c.start) {
            if !accepted.iter().any(|a| c.start < a.end && a.start < c.end) {
                accepted.push(*c);
            }
        }
        if pinned > 0 {
            accepted.sort_by_key(|c| c.start);
        }

        let mut char_index = CharIndex::new(doc);
        accepted
            .into_iter()
            .filter_map(|c| {
                let surface = &doc[c.start..c.end];
                let entity = Entity::new(surface, c.etype);
                if entity.normalized.is_empty() {
                    return None;
                }
                Some(EntityMention {
                    span: Span { start: char_index.at(c.start), end: char_index.at(c.end) },
                    bytes: (c.start, c.end),
                    entity,
                })
            })
            .collect()
    }
}

fn push_matches(out: &mut Vec<Candidate>, re: &Regex, doc: &str, etype: EntityType, family: Family) {
    for m in re.find_iter(doc) {
        if m.start() < m.end() {
            out.push(Candidate { start: m.start(), end: m.end(), etype, family });
        }
    }
}

/// A bare year is only a date when it is not glued to a larger number.
fn standalone_number(doc: &str, start: usize, end: usize) -> bool {
    let before = doc[..start].chars().next_back();
    let after: Vec<char> = doc[end..].chars().take(2).collect();
    let glued_before = before.is_some_and(|c| c.is_ascii_digit() || c == '$' || c == ',' || c == '.');
    let glued_after = match after.as_slice() {
        [c, ..] if c.is_ascii_digit() => true,
        [',' | '.', d, ..] if d.is_ascii_digit() => true,
        _ => false,
    };
    !glued_before && !glued_after
}

/// Incremental byte-to-char offset conversion for ascending byte offsets.
struct CharIndex<'a> {
    doc: &'a str,
    byte: usize,
    chars: usize,
}

impl<'a> CharIndex<'a> {
    fn new(doc: &'a str) -> Self {
        CharIndex { doc, byte: 0, chars: 0 }
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

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    start: usize,
    end: usize,
}

impl Token<'_> {
    fn bare(&self) -> &str {
        self.text.trim_end_matches('.')
    }

    fn lower(&self) -> String {
        self.bare().to_lowercase()
    }

    fn is_cap(&self) -> bool {
        self.text.chars().next().is_some_and(|c| c.is_uppercase())
    }

    fn is_number(&self) -> bool {
        self.text.chars().next().is_some_and(|c| c.is_ascii_digit())
    }

    fn is_versus(&self) -> bool {
        matches!(self.text, "v." | "vs." | "v" | "vs")
    }
}

/// Splits `doc` into word tokens, detaching a sentence-final period unless
/// the word is a known abbreviation, an initial, or a dotted acronym.
fn tokenize(doc: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for m in TOKEN.find_iter(doc) {
        let text = m.as_str();
        if text.len() > 1 && text.ends_with('.') && !text[..text.len() - 1].contains('.') {
            let bare = &text[..text.len() - 1];
            let initial = bare.chars().count() == 1 && bare.chars().all(char::is_uppercase);
            if !initial && !ABBREVIATIONS.contains(&bare) {
                out.push(Token { text: bare, start: m.start(), end: m.end() - 1 });
                out.push(Token { text: ".", start: m.end() - 1, end: m.end() });
                continue;
            }
        }
        out.push(Token { text, start: m.start(), end: m.end() });
    }
    out
}

const CONNECTORS: &[&str] = &["of", "for", "the", "de", "la", "del", "van", "von", "&"];

fn name_candidates(doc: &str, out: &mut Vec<Candidate>) {
    let tokens = tokenize(doc);
    let mut i = 0;
    while i < tokens.len() {
        if !tokens[i].is_cap() || tokens[i].is_versus() {
            i += 1;
            continue;
        }
        // Collect a maximal run of capitalized words and inner connectors.
        let mut j = i;
        let mut last_cap = i;
        while j < tokens.len() {
            let t = &tokens[j];
            if t.is_cap() {
                if tokens.get(j + 1).is_some_and(|n| n.is_number()) {
                    break;
                }
                last_cap = j;
                j += 1;
                // A corporate suffix closes the name unless another suffix follows.
                if is_suffix(Some(t)) && tokens.get(j).is_none_or(|n| n.text != ",") {
                    break;
                }
            } else if j > i && (CONNECTORS.contains(&t.text) || t.text == "," && is_suffix(tokens.get(j + 1))) {
                j += 1;
            } else {
                break;
            }
        }
        if j == i {
            i += 1;
            continue;
        }
        let run = &tokens[i..=last_cap];
        // Drop leading stopwords and bare sentence openers.
        let mut s = 0;
        while s < run.len() && (STOPWORDS.contains(&run[s].lower().as_str()) || !run[s].is_cap()) {
            s += 1;
        }
        let run = &run[s..];
        let after_versus = i > 0 && tokens[i - 1].is_versus();
        let before_versus = tokens.get(last_cap + 1).is_some_and(Token::is_versus);
        if let Some(c) = classify(doc, run, after_versus || before_versus) {
            out.push(c);
        }
        i = last_cap + 1;
    }
}

fn is_suffix(t: Option<&Token>) -> bool {
    t.is_some_and(|t| CORPORATE_SUFFIXES.contains(&t.lower().as_str()))
}

fn classify(doc: &str, run: &[Token], versus: bool) -> Option<Candidate> {
    let first = run.first()?;
    let last = run.last()?;
    let (start, end) = (first.start, last.end);
    let words: Vec<String> = run.iter().filter(|t| t.is_cap()).map(Token::lower).collect();
    let phrase = normalize_phrase(&doc[start..end]);
    let candidate = |etype| Some(Candidate { start, end, etype, family: Family::Name });

    if words.len() > 1 && CORPORATE_SUFFIXES.contains(&last.lower().as_str()) {
        return candidate(EntityType::Organization);
    }
    if words.len() > 1 && HONORIFICS.contains(&words[0].as_str()) {
        return candidate(EntityType::Person);
    }
    if words.len() > 1 && words.iter().any(|w| INSTITUTION_WORDS.contains(&w.as_str())) {
        return candidate(EntityType::Organization);
    }
    if LOCATIONS.contains(&phrase.as_str())
        || (words.len() > 1 && LOCATION_HEADS.contains(&words[words.len() - 1].as_str()))
        || phrase.starts_with("state of ")
        || phrase.starts_with("city of ")
        || phrase.starts_with("county of ")
    {
        return candidate(EntityType::Location);
    }
    if versus {
        return candidate(EntityType::Person);
    }
    if words.len() > 1 {
        return candidate(EntityType::Other);
    }
    None
}

fn normalize_phrase(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}
