//! Labeled knowledge-graph model shared by extraction, scoring and audit.
//!
//! Nodes are typed entities identified by `(normalized text, type)`. Edges
//! are directed, labeled relations; two edges are the same edge when their
//! endpoint keys and normalized label agree, so repeated triples collapse
//! while distinct labels between the same endpoints coexist.

use std::fmt;
use std::str::FromStr;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::GraphError;
use crate::normalize::{normalize_label, normalize_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Person,
    Organization,
    Date,
    Money,
    Citation,
    Provision,
    Location,
    Other,
}

impl EntityType {
    pub const ALL: [EntityType; 8] = [
        EntityType::Person,
        EntityType::Organization,
        EntityType::Date,
        EntityType::Money,
        EntityType::Citation,
        EntityType::Provision,
        EntityType::Location,
        EntityType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Person => "person",
            EntityType::Organization => "organization",
            EntityType::Date => "date",
            EntityType::Money => "money",
            EntityType::Citation => "citation",
            EntityType::Provision => "provision",
            EntityType::Location => "location",
            EntityType::Other => "other",
        }
    }

    /// Maps an extractor label onto the closed set. Unknown labels become
    /// `Other`; common NER tag spellings are accepted.
    pub fn from_label(label: &str) -> EntityType {
        match label.trim().to_ascii_lowercase().as_str() {
            "person" | "per" | "people" => EntityType::Person,
            "organization" | "organisation" | "org" | "company" => EntityType::Organization,
            "date" | "time" => EntityType::Date,
            "money" | "amount" | "currency" => EntityType::Money,
            "citation" | "cite" | "case_citation" => EntityType::Citation,
            "provision" | "section" | "statute" | "law" => EntityType::Provision,
            "location" | "loc" | "gpe" | "place" => EntityType::Location,
            _ => EntityType::Other,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(EntityType::from_label(s))
    }
}

/// Identity of a node: normalized text plus type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityKey {
    pub normalized: String,
    pub etype: EntityType,
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} \"{}\"", self.etype, self.normalized)
    }
}

/// A typed entity. Equality and hashing use only the key, never the surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entity {
    pub surface: String,
    pub normalized: String,
    pub etype: EntityType,
}

impl Entity {
    pub fn new(surface: impl Into<String>, etype: EntityType) -> Self {
        let surface = surface.into();
        let normalized = normalize_text(&surface);
        Entity { surface, normalized, etype }
    }

    pub fn key(&self) -> EntityKey {
        EntityKey { normalized: self.normalized.clone(), etype: self.etype }
    }
}

impl PartialEq for Entity {
    fn eq(&self, other: &Self) -> bool {
        self.etype == other.etype && self.normalized == other.normalized
    }
}

impl Eq for Entity {}

impl std::hash::Hash for Entity {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.normalized.hash(state);
        self.etype.hash(state);
    }
}

/// Character offsets `[start, end)` into the text a relation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Relation {
    pub subject: Entity,
    pub label_surface: String,
    pub label_normalized: String,
    pub object: Entity,
    pub provenance: Option<Span>,
}

impl Relation {
    pub fn new(subject: Entity, label: impl Into<String>, object: Entity) -> Self {
        let label_surface = label.into();
        let label_normalized = normalize_label(&label_surface);
        Relation { subject, label_surface, label_normalized, object, provenance: None }
    }

    pub fn with_provenance(mut self, span: Span) -> Self {
        self.provenance = Some(span);
        self
    }

    pub fn key(&self) -> EdgeKey {
        EdgeKey {
            subject: self.subject.key(),
            label: self.label_normalized.clone(),
            object: self.object.key(),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}) -[{}]-> ({})",
            self.subject.normalized, self.label_normalized, self.object.normalized
        )
    }
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Relation {}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub subject: EntityKey,
    pub label: String,
    pub object: EntityKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Context,
    Query,
    Response,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Context => "context",
            Origin::Query => "query",
            Origin::Response => "response",
        }
    }
}

impl FromStr for Origin {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "context" => Ok(Origin::Context),
            "query" => Ok(Origin::Query),
            "response" => Ok(Origin::Response),
            other => Err(GraphError::Schema(format!("unknown origin {other:?}"))),
        }
    }
}

/// Directed labeled multigraph with merge-on-insert node and edge sets.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    origin: Origin,
    nodes: IndexMap<EntityKey, Entity>,
    edges: IndexMap<EdgeKey, Relation>,
}

impl KnowledgeGraph {
    pub fn new(origin: Origin) -> Self {
        KnowledgeGraph { origin, nodes: IndexMap::new(), edges: IndexMap::new() }
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Inserts `e` unless a node with the same key exists. Empty normalized
    /// text is rejected since it cannot identify anything.
    pub fn insert_entity(&mut self, e: Entity) -> Option<EntityKey> {
        if e.normalized.is_empty() {
            return None;
        }
        let key = e.key();
        self.nodes.entry(key.clone()).or_insert(e);
        Some(key)
    }

    /// Inserts `r`, adding its endpoints as nodes when absent. Returns false
    /// if the relation is unusable (empty endpoint or label).
    pub fn insert_relation(&mut self, r: Relation) -> bool {
        if r.label_normalized.is_empty()
            || r.subject.normalized.is_empty()
            || r.object.normalized.is_empty()
        {
            return false;
        }
        self.insert_entity(r.subject.clone());
        self.insert_entity(r.object.clone());
        self.edges.entry(r.key()).or_insert(r);
        true
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Entity> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Relation> {
        self.edges.values()
    }

    pub fn contains_key(&self, key: &EntityKey) -> bool {
        self.nodes.contains_key(key)
    }

    pub fn node(&self, key: &EntityKey) -> Option<&Entity> {
        self.nodes.get(key)
    }

    /// Union of node and edge sets; the result keeps `self`'s origin.
    pub fn union(&self, other: &KnowledgeGraph) -> KnowledgeGraph {
        let mut out = self.clone();
        for n in other.nodes() {
            out.insert_entity(n.clone());
        }
        for e in other.edges() {
            out.insert_relation(e.clone());
        }
        out
    }

    /// Order-free comparison of node and edge key sets.
    pub fn same_structure(&self, other: &KnowledgeGraph) -> bool {
        let a: IndexSet<_> = self.nodes.keys().collect();
        let b: IndexSet<_> = other.nodes.keys().collect();
        let ea: IndexSet<_> = self.edges.keys().collect();
        let eb: IndexSet<_> = other.edges.keys().collect();
        self.origin == other.origin && a == b && ea == eb
    }

    /// Full scan of the endpoint invariant.
    pub fn endpoints_consistent(&self) -> bool {
        self.edges.values().all(|r| {
            self.nodes.contains_key(&r.subject.key()) && self.nodes.contains_key(&r.object.key())
        })
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes()
            .map(|n| json!({"surface": n.surface, "normalized": n.normalized, "etype": n.etype}))
            .collect();
        let edges: Vec<Value> = self
            .edges()
            .map(|e| {
                let mut m = Map::new();
                m.insert("subject".into(), json!(e.subject.normalized));
                m.insert("subject_etype".into(), json!(e.subject.etype));
                m.insert("relation".into(), json!(e.label_surface));
                m.insert("relation_normalized".into(), json!(e.label_normalized));
                m.insert("object".into(), json!(e.object.normalized));
                m.insert("object_etype".into(), json!(e.object.etype));
                if let Some(span) = e.provenance {
                    m.insert("span".into(), json!([span.start, span.end]));
                }
                Value::Object(m)
            })
            .collect();
        json!({"origin": self.origin.as_str(), "nodes": nodes, "edges": edges})
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("graph json is always serializable")
    }

    /// Parses the canonical graph JSON. In strict mode unknown fields are an
    /// error; otherwise they are ignored. Edge endpoints refer to nodes by
    /// normalized text, disambiguated by `*_etype` when present.
    pub fn from_json(value: &Value, strict: bool) -> Result<KnowledgeGraph, GraphError> {
        let obj = as_object(value, "graph")?;
        check_fields(obj, &["origin", "nodes", "edges"], strict, "graph")?;
        let origin: Origin = get_str(obj, "origin", "graph")?.parse()?;
        let mut g = KnowledgeGraph::new(origin);

        for node in get_array(obj, "nodes")? {
            let n = as_object(node, "node")?;
            check_fields(n, &["surface", "normalized", "etype"], strict, "node")?;
            let surface = get_str(n, "surface", "node")?;
            let normalized = get_str(n, "normalized", "node")?;
            let etype: EntityType =
                serde_json::from_value(n.get("etype").cloned().unwrap_or(Value::Null))
                    .map_err(|e| GraphError::Schema(format!("node etype: {e}")))?;
            if normalized.is_empty() {
                return Err(GraphError::Schema("node with empty normalized text".into()));
            }
            g.insert_entity(Entity {
                surface: surface.to_string(),
                normalized: normalized.to_string(),
                etype,
            });
        }

        for edge in get_array(obj, "edges")? {
            let e = as_object(edge, "edge")?;
            check_fields(
                e,
                &[
                    "subject",
                    "subject_etype",
                    "relation",
                    "relation_normalized",
                    "object",
                    "object_etype",
                    "span",
                ],
                strict,
                "edge",
            )?;
            let subject = g.resolve_endpoint(e, "subject")?;
            let object = g.resolve_endpoint(e, "object")?;
            let label_surface = get_str(e, "relation", "edge")?.to_string();
            let label_normalized = match e.get("relation_normalized") {
                Some(Value::String(s)) => s.clone(),
                Some(_) => return Err(GraphError::Schema("relation_normalized must be a string".into())),
                None => normalize_label(&label_surface),
            };
            if label_normalized.is_empty() {
                return Err(GraphError::Schema("edge with empty relation label".into()));
            }
            let provenance = match e.get("span") {
                None | Some(Value::Null) => None,
                Some(v) => {
                    let [start, end]: [usize; 2] = serde_json::from_value(v.clone())
                        .map_err(|err| GraphError::Schema(format!("edge span: {err}")))?;
                    Some(Span { start, end })
                }
            };
            g.insert_relation(Relation { subject, label_surface, label_normalized, object, provenance });
        }
        Ok(g)
    }

    pub fn from_json_str(s: &str, strict: bool) -> Result<KnowledgeGraph, GraphError> {
        let value: Value = serde_json::from_str(s).map_err(|e| GraphError::Json(e.to_string()))?;
        KnowledgeGraph::from_json(&value, strict)
    }

    fn resolve_endpoint(&self, edge: &Map<String, Value>, field: &str) -> Result<Entity, GraphError> {
        let normalized = get_str(edge, field, "edge")?;
        let etype_field = format!("{field}_etype");
        let explicit: Option<EntityType> = match edge.get(&etype_field) {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                serde_json::from_value(v.clone())
                    .map_err(|e| GraphError::Schema(format!("{etype_field}: {e}")))?,
            ),
        };
        let mut candidates = self.nodes().filter(|n| {
            n.normalized == normalized && explicit.is_none_or(|t| t == n.etype)
        });
        match (candidates.next(), candidates.next()) {
            (Some(n), None) => Ok(n.clone()),
            (None, _) => Err(GraphError::DanglingEndpoint(normalized.to_string())),
            (Some(_), Some(_)) => Err(GraphError::AmbiguousEndpoint(normalized.to_string())),
        }
    }
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, GraphError> {
    v.as_object().ok_or_else(|| GraphError::Schema(format!("{what} must be a JSON object")))
}

fn get_str<'a>(obj: &'a Map<String, Value>, field: &str, what: &str) -> Result<&'a str, GraphError> {
    obj.get(field)
        .and_then(Value::as_str)
        .ok_or_else(|| GraphError::Schema(format!("{what} field {field:?} missing or not a string")))
}

fn get_array<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a [Value], GraphError> {
    match obj.get(field) {
        Some(Value::Array(a)) => Ok(a),
        None => Ok(&[]),
        Some(_) => Err(GraphError::Schema(format!("{field:?} must be an array"))),
    }
}

fn check_fields(
    obj: &Map<String, Value>,
    allowed: &[&str],
    strict: bool,
    what: &str,
) -> Result<(), GraphError> {
    if !strict {
        return Ok(());
    }
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(GraphError::UnknownField { field: k.clone(), context: what.to_string() }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn org(s: &str) -> Entity {
        Entity::new(s, EntityType::Organization)
    }

    #[test]
    fn duplicate_entity_merges() {
        let mut g = KnowledgeGraph::new(Origin::Context);
        g.insert_entity(org("Tenant"));
        g.insert_entity(org("Tenant"));
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn type_is_part_of_identity() {
        let mut g = KnowledgeGraph::new(Origin::Context);
        g.insert_entity(Entity::new("2024", EntityType::Date));
        g.insert_entity(Entity::new("2024", EntityType::Money));
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn normalized_surfaces_merge() {
        let mut g = KnowledgeGraph::new(Origin::Context);
        g.insert_entity(org("Westfield Properties LLC"));
        g.insert_entity(org(" westfield properties llc"));
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.nodes().next().unwrap().surface, "Westfield Properties LLC");
    }

    #[test]
    fn relation_inserts_endpoints() {
        let mut g = KnowledgeGraph::new(Origin::Response);
        let r = Relation::new(org("A"), "shall pay", org("B"));
        assert!(g.insert_relation(r.clone()));
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        g.insert_relation(r);
        assert_eq!(g.edge_count(), 1);
        g.insert_relation(Relation::new(org("A"), "shall notify", org("B")));
        assert_eq!(g.edge_count(), 2);
        assert!(g.endpoints_consistent());
    }

    #[test]
    fn self_loops_are_ordinary_edges() {
        let mut g = KnowledgeGraph::new(Origin::Context);
        g.insert_relation(Relation::new(org("Agreement"), "amends", org("Agreement")));
        assert_eq!((g.node_count(), g.edge_count()), (1, 1));
    }

    #[test]
    fn strict_mode_rejects_unknown_fields() {
        let doc = r#"{"origin":"context","nodes":[{"surface":"A","normalized":"a","etype":"other","x":1}],"edges":[]}"#;
        assert!(matches!(
            KnowledgeGraph::from_json_str(doc, true),
            Err(GraphError::UnknownField { .. })
        ));
        assert_eq!(KnowledgeGraph::from_json_str(doc, false).unwrap().node_count(), 1);
    }

    #[test]
    fn dangling_and_ambiguous_endpoints() {
        let dangling = r#"{"origin":"context","nodes":[],"edges":[{"subject":"a","relation":"r","object":"b"}]}"#;
        assert!(matches!(
            KnowledgeGraph::from_json_str(dangling, true),
            Err(GraphError::DanglingEndpoint(_))
        ));
        let ambiguous = r#"{"origin":"context","nodes":[
            {"surface":"2024","normalized":"2024","etype":"date"},
            {"surface":"2024","normalized":"2024","etype":"money"}],
            "edges":[{"subject":"2024","relation":"r","object":"2024"}]}"#;
        assert!(matches!(
            KnowledgeGraph::from_json_str(ambiguous, true),
            Err(GraphError::AmbiguousEndpoint(_))
        ));
    }

    #[test]
    fn unknown_etype_label_maps_to_other() {
        assert_eq!(EntityType::from_label("WORK_OF_ART"), EntityType::Other);
        assert_eq!(EntityType::from_label("ORG"), EntityType::Organization);
    }

    fn arb_entity() -> impl Strategy<Value = Entity> {
        ("[a-e]{1,2}", prop::sample::select(EntityType::ALL.to_vec()))
            .prop_map(|(s, t)| Entity::new(s, t))
    }

    fn arb_graph() -> impl Strategy<Value = KnowledgeGraph> {
        (
            prop::collection::vec(arb_entity(), 0..8),
            prop::collection::vec((arb_entity(), "[xyz]{1,2}", arb_entity()), 0..10),
        )
            .prop_map(|(nodes, edges)| {
                let mut g = KnowledgeGraph::new(Origin::Context);
                for n in nodes {
                    g.insert_entity(n);
                }
                for (s, l, o) in edges {
                    g.insert_relation(
                        Relation::new(s, l, o).with_provenance(Span { start: 0, end: 3 }),
                    );
                }
                g
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(g in arb_graph()) {
            let back = KnowledgeGraph::from_json_str(&g.to_json_string(), true).unwrap();
            prop_assert!(back.same_structure(&g));
            prop_assert!(back.endpoints_consistent());
        }

        #[test]
        fn reinserting_is_idempotent(g in arb_graph()) {
            let mut again = g.clone();
            for n in g.nodes() { again.insert_entity(n.clone()); }
            for e in g.edges() { again.insert_relation(e.clone()); }
            prop_assert_eq!(again.node_count(), g.node_count());
            prop_assert_eq!(again.edge_count(), g.edge_count());
        }
    }
}
