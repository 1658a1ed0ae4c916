//! Hallucination operators applied to factual responses.

use std::collections::BTreeSet;

use once_cell::sync::Lazy;
use rand::seq::IndexedRandom;
use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::corpus::{Perturbation, PerturbationKind};
use super::generate::{bank_name, format_money, insurer_name, org_name, person_name, street_name, CITIES};
use crate::error::BenchError;
use crate::graph::{Entity, EntityKey, EntityType};
use crate::ner::{entity_set, recognize_entities};
use crate::normalize::normalize_text;

/// How an amount in a document follows from other amounts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Derivation {
    Stated,
    Product { base: u64, factor: u32 },
    Percent { base: u64, percent: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericFact {
    pub name: String,
    pub value: u64,
    pub rendered: String,
    pub derivation: Derivation,
}

const TITLES: &[&str] = &["Mr.", "Ms.", "Dr.", "Judge"];
const CIRCUIT_NAMES: &[&str] = &["First", "Second", "Third", "Fourth", "Fifth", "Sixth", "Seventh", "Eighth", "Ninth", "Tenth", "Eleventh"];
const MAX_TRIES: usize = 64;

static DIGITS: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d+").unwrap());
static YEAR: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b(1[89]|20)\d{2}\b").unwrap());

/// Replaces one planted entity of `response` with a type-consistent entity
/// from outside `planted`. Entities the query names are left alone unless
/// nothing else can be replaced, so the substitution lands on the answer.
pub fn perturb_entity(
    response: &str,
    planted: &[Entity],
    query: &str,
    rng: &mut impl Rng,
) -> Result<(String, Perturbation), BenchError> {
    let avoid: BTreeSet<EntityKey> = planted.iter().map(Entity::key).collect();
    let asked = entity_set(query);
    let mentions: Vec<_> = recognize_entities(response)
        .into_iter()
        .filter(|m| avoid.contains(&m.entity.key()) && substitutable(&m.entity))
        .collect();
    let answer: Vec<_> = mentions.iter().filter(|m| !asked.contains(&m.entity.key())).collect();
    let pool: Vec<_> = if answer.is_empty() { mentions.iter().collect() } else { answer };
    let Some(m) = pool.choose(rng) else {
        return Err(BenchError::NoSubstitutableEntity);
    };
    let original = &response[m.bytes.0..m.bytes.1];
    for _ in 0..MAX_TRIES {
        let Some(replacement) = replacement_for(&m.entity, original, rng) else {
            break;
        };
        let key = EntityKey { normalized: normalize_text(&replacement), etype: m.entity.etype };
        if key.normalized == m.entity.normalized || avoid.contains(&key) {
            continue;
        }
        let text = splice(response, m.bytes, original, &replacement);
        return Ok((
            text,
            Perturbation { kind: PerturbationKind::EntitySubstitution, original: original.to_string(), replacement },
        ));
    }
    Err(BenchError::NoSubstitutableEntity)
}

/// Restates one amount of `response` inconsistently with the rule it is
/// derived by.
pub fn perturb_contradiction(
    response: &str,
    facts: &[NumericFact],
    rng: &mut impl Rng,
) -> Result<(String, Perturbation), BenchError> {
    let present: Vec<&NumericFact> = facts.iter().filter(|f| contains_amount(response, &f.rendered)).collect();
    // Prefer derived amounts, which admit a genuine miscalculation.
    let derived: Vec<&NumericFact> = present.iter().copied().filter(|f| f.derivation != Derivation::Stated).collect();
    let pool = if derived.is_empty() { &present } else { &derived };
    let Some(fact) = pool.choose(rng) else {
        return Err(BenchError::NoNumericFact);
    };
    // Half the time the amount is confused with another figure of the same
    // document, the rest it is recomputed wrongly.
    let others: Vec<&NumericFact> =
        facts.iter().filter(|f| f.value != fact.value && !contains_amount(response, &f.rendered)).collect();
    if !others.is_empty() && rng.random_bool(0.5) {
        let other = others.choose(rng).unwrap();
        return Ok(replace_amount(response, fact, other.rendered.clone()));
    }
    for _ in 0..MAX_TRIES {
        let wrong = miscalculate(fact, rng);
        if wrong == 0 || facts.iter().any(|f| f.value == wrong) {
            continue;
        }
        return Ok(replace_amount(response, fact, format_money(wrong)));
    }
    Err(BenchError::NoNumericFact)
}

fn replace_amount(response: &str, fact: &NumericFact, replacement: String) -> (String, Perturbation) {
    let at = find_amount(response, &fact.rendered).expect("amount present");
    let text = format!("{}{}{}", &response[..at], replacement, &response[at + fact.rendered.len()..]);
    let perturbation =
        Perturbation { kind: PerturbationKind::LogicalContradiction, original: fact.rendered.clone(), replacement };
    (text, perturbation)
}

fn miscalculate(fact: &NumericFact, rng: &mut impl Rng) -> u64 {
    match fact.derivation {
        Derivation::Product { base, factor } => {
            let delta = *[-2i64, -1, 1, 2, 6, 12].choose(rng).unwrap();
            base * (factor as i64 + delta).max(1) as u64
        }
        Derivation::Percent { base, percent } => {
            if rng.random_bool(0.5) {
                // Decimal slip: ten times the correct share.
                base * percent as u64 / 10
            } else {
                let delta = *[-3i64, -2, -1, 1, 2, 3].choose(rng).unwrap();
                base * (percent as i64 + delta).max(1) as u64 / 100
            }
        }
        Derivation::Stated => scale_amount(fact.value, rng),
    }
}

fn scale_amount(value: u64, rng: &mut impl Rng) -> u64 {
    let factor = if rng.random_bool(0.5) { rng.random_range(1.15..1.8) } else { rng.random_range(0.4..0.85) };
    let step = if value >= 10_000 { 500 } else if value >= 1_000 { 50 } else { 5 };
    (((value as f64 * factor) / step as f64).round() as u64 * step).max(step)
}

/// Amount occurrence not followed by further digits.
fn find_amount(text: &str, rendered: &str) -> Option<usize> {
    text.match_indices(rendered).map(|(i, _)| i).find(|&i| {
        let rest = &text[i + rendered.len()..];
        !(rest.starts_with(',') && rest[1..].starts_with(|c: char| c.is_ascii_digit()))
            && !rest.starts_with(|c: char| c.is_ascii_digit())
    })
}

fn contains_amount(text: &str, rendered: &str) -> bool {
    find_amount(text, rendered).is_some()
}

fn substitutable(e: &Entity) -> bool {
    match e.etype {
        EntityType::Other => e.normalized.ends_with(" street"),
        EntityType::Organization => {
            let n = &e.normalized;
            !(n.contains("court") && !n.contains("circuit") && !n.contains("district of"))
        }
        _ => true,
    }
}

fn replacement_for(e: &Entity, original: &str, rng: &mut impl Rng) -> Option<String> {
    Some(match e.etype {
        EntityType::Person => {
            let first = original.split_whitespace().next().unwrap_or("");
            if TITLES.contains(&first) {
                person_name(rng, first)
            } else if !original.contains(' ') {
                // Bare surname, as in a case caption.
                person_name(rng, "").rsplit(' ').next().unwrap().to_string()
            } else {
                let title = *TITLES.choose(rng).unwrap();
                person_name(rng, title)
            }
        }
        EntityType::Organization => {
            if let Some(idx) = original.find(" Circuit") {
                let head = original[..idx].rsplit_once(' ')?.0;
                format!("{head} {} Circuit{}", CIRCUIT_NAMES.choose(rng).unwrap(), &original[idx + 8..])
            } else if let Some(idx) = original.find("District of ") {
                let (_, state) = CITIES.choose(rng).unwrap();
                format!("{}District of {state}", &original[..idx])
            } else if original.contains("Savings Bank") {
                bank_name(rng)
            } else if original.contains("Mutual Insurance") {
                insurer_name(rng)
            } else {
                org_name(rng)
            }
        }
        EntityType::Date => {
            let m = YEAR.find_iter(original).last()?;
            let year: i32 = m.as_str().parse().ok()?;
            let delta = *[-2, -1, 1, 2].choose(rng).unwrap();
            format!("{}{}{}", &original[..m.start()], year + delta, &original[m.end()..])
        }
        EntityType::Money => {
            let cents = original.ends_with(".00");
            let digits: String = original.trim_end_matches(".00").chars().filter(char::is_ascii_digit).collect();
            let value: u64 = digits.parse().ok()?;
            let s = format_money(scale_amount(value, rng));
            if cents {
                s + ".00"
            } else {
                s
            }
        }
        EntityType::Provision => {
            let m = DIGITS.find_iter(original).last()?;
            format!("{}{}{}", &original[..m.start()], other_number(m.as_str(), rng), &original[m.end()..])
        }
        EntityType::Citation => {
            let m = DIGITS.find(original)?;
            format!("{}{}{}", &original[..m.start()], other_number(m.as_str(), rng), &original[m.end()..])
        }
        EntityType::Location => {
            let (city, state) = CITIES.choose(rng).unwrap();
            if CITIES.iter().any(|(_, s)| s.eq_ignore_ascii_case(original)) {
                state.to_string()
            } else {
                city.to_string()
            }
        }
        EntityType::Other => street_name(rng),
    })
}

fn other_number(digits: &str, rng: &mut impl Rng) -> String {
    let len = digits.len() as u32;
    let lo = if len == 1 { 1 } else { 10u64.pow(len - 1) };
    let hi = 10u64.pow(len) - 1;
    loop {
        let n = rng.random_range(lo..=hi).to_string();
        if n != digits {
            return n;
        }
    }
}

/// Replaces `bytes` of `text`, keeping exactly one sentence-final period
/// when either name ends in an abbreviation.
fn splice(text: &str, bytes: (usize, usize), original: &str, replacement: &str) -> String {
    let (start, end) = bytes;
    let mut rest = &text[end..];
    let mut out = String::with_capacity(text.len() + replacement.len());
    out.push_str(&text[..start]);
    out.push_str(replacement);
    if replacement.ends_with('.') && rest.starts_with('.') {
        rest = &rest[1..];
    } else if original.ends_with('.') && !replacement.ends_with('.') && ends_sentence(rest) {
        out.push('.');
    }
    out.push_str(rest);
    out
}

/// The abbreviation period before `rest` also closed the sentence.
fn ends_sentence(rest: &str) -> bool {
    let trimmed = rest.trim_start();
    trimmed.is_empty() || (rest.starts_with(char::is_whitespace) && trimmed.starts_with(char::is_uppercase))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn keys(text: &str) -> BTreeSet<EntityKey> {
        recognize_entities(text).into_iter().map(|m| m.entity.key()).collect()
    }

    fn planted(text: &str) -> Vec<Entity> {
        recognize_entities(text).into_iter().map(|m| m.entity).collect()
    }

    #[test]
    fn substitution_is_type_consistent_and_fresh() {
        let resp = "Harbor Coffee Inc. shall pay base rent of $12,500 per month to Westfield Properties LLC.";
        let avoid = keys(resp);
        for seed in 0..50 {
            let (text, pert) = perturb_entity(resp, &planted(resp), "", &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_ne!(text, resp);
            assert!(text.ends_with('.') && !text.ends_with(".."), "{text}");
            let (before, after) = (keys(resp), keys(&text));
            let added: Vec<_> = after.difference(&before).collect();
            assert_eq!(added.len(), 1, "{text}");
            assert!(!avoid.contains(added[0]));
            let removed: Vec<_> = before.difference(&after).collect();
            assert_eq!(removed.len(), 1, "{text}");
            assert_eq!(added[0].etype, removed[0].etype);
            assert!(text.contains(&pert.replacement));
        }
    }

    #[test]
    fn period_after_abbreviation_is_kept_single() {
        assert_eq!(splice("paid Acme LLC.", (5, 13), "Acme LLC", "Zed Inc."), "paid Zed Inc.");
        assert_eq!(splice("paid Zed Inc.", (5, 13), "Zed Inc.", "Acme LLC"), "paid Acme LLC.");
        assert_eq!(splice("Zed Inc. shall pay", (0, 8), "Zed Inc.", "Acme LLC"), "Acme LLC shall pay");
        assert_eq!(splice("to Zed Inc. Then", (3, 11), "Zed Inc.", "Acme LLC"), "to Acme LLC. Then");
    }

    #[test]
    fn dates_shift_year() {
        let e = Entity::new("March 1, 2024", EntityType::Date);
        let r = replacement_for(&e, "March 1, 2024", &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(r.starts_with("March 1, 20"));
        assert_ne!(r, "March 1, 2024");
    }

    #[test]
    fn contradiction_breaks_derivation() {
        let facts = vec![
            NumericFact { name: "rent".into(), value: 10_000, rendered: "$10,000".into(), derivation: Derivation::Stated },
            NumericFact {
                name: "total".into(),
                value: 360_000,
                rendered: "$360,000".into(),
                derivation: Derivation::Product { base: 10_000, factor: 36 },
            },
        ];
        let resp = "Total base rent for the term shall equal $360,000.";
        for seed in 0..20 {
            let (text, pert) = perturb_contradiction(resp, &facts, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(pert.original, "$360,000");
            let v: u64 = pert.replacement.chars().filter(char::is_ascii_digit).collect::<String>().parse().unwrap();
            assert_eq!(v % 10_000, 0);
            assert_ne!(v, 360_000);
            assert_eq!(text.matches('$').count(), 1);
            assert!(text.contains(&pert.replacement));
        }
        assert!(matches!(
            perturb_contradiction("No amounts here.", &facts, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(BenchError::NoNumericFact)
        ));
    }

    #[test]
    fn amount_match_is_whole() {
        assert_eq!(find_amount("paid $12,500", "$12,500"), Some(5));
        assert_eq!(find_amount("paid $12,5000", "$12,500"), None);
        assert_eq!(find_amount("paid $12,500,000", "$12,500"), None);
        assert_eq!(find_amount("paid $12,500.00", "$12,500"), Some(5));
    }
}
