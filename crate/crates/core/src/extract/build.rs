use super::ingest::ingest_path;
use super::{extract_builtin, RawTriple, TripleSource};
use crate::error::ExtractError;
use crate::graph::{Entity, EntityType, KnowledgeGraph, Origin, Relation};
use crate::ner::{EntityMention, Recognizer};
use crate::normalize::normalize_text;

/// Builds the graph of `doc` with the default recognizer.
pub fn build_graph(doc: &str, origin: Origin, source: TripleSource<'_>) -> Result<KnowledgeGraph, ExtractError> {
    build_graph_with(doc, origin, source, &Recognizer::default())
}

pub fn build_graph_with(
    doc: &str,
    origin: Origin,
    source: TripleSource<'_>,
    recognizer: &Recognizer,
) -> Result<KnowledgeGraph, ExtractError> {
    let mentions = recognizer.recognize(doc);
    let triples = match source {
        TripleSource::Builtin => extract_builtin(doc),
        TripleSource::File(path) => ingest_path(path)?.triples,
        TripleSource::Remote(remote) => remote.extract(doc)?.triples,
    };
    Ok(link_triples(&mentions, &triples, origin))
}

/// Nodes are the mentions; each triple endpoint is linked to the longest
/// mention whose normalized text it contains, or becomes an `Other` entity.
pub fn link_triples(mentions: &[EntityMention], triples: &[RawTriple], origin: Origin) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new(origin);
    for m in mentions {
        g.insert_entity(m.entity.clone());
    }
    for t in triples {
        let (Some(subject), Some(object)) = (link(mentions, &t.subject), link(mentions, &t.object)) else {
            continue;
        };
        let mut r = Relation::new(subject, t.relation.trim(), object);
        if r.label_normalized.is_empty() {
            continue;
        }
        if let Some(span) = t.span {
            r = r.with_provenance(span);
        }
        g.insert_relation(r);
    }
    g
}

fn link(mentions: &[EntityMention], text: &str) -> Option<Entity> {
    let normalized = normalize_text(text);
    if normalized.is_empty() {
        return None;
    }
    let best = mentions
        .iter()
        .filter(|m| contains_words(&normalized, &m.entity.normalized))
        .fold(None::<&EntityMention>, |best, m| match best {
            Some(b) if b.entity.normalized.len() >= m.entity.normalized.len() => Some(b),
            _ => Some(m),
        });
    Some(match best {
        Some(m) => m.entity.clone(),
        None => Entity::new(text.trim(), EntityType::Other),
    })
}

/// `needle` occurs in `haystack` on word boundaries.
fn contains_words(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.match_indices(needle).any(|(i, _)| {
        let before = haystack[..i].chars().next_back();
        let after = haystack[i + needle.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}
