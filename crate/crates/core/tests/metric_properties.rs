use std::collections::BTreeSet;

use hallugraph_core::graph::{Entity, EntityType, KnowledgeGraph, Origin, Relation};
use hallugraph_core::metrics::{
    align, check_subgraph_certificate, composite_fidelity, entity_grounding, relation_preservation, SynonymTable,
};
use proptest::prelude::*;

const NAMES: [&str; 10] = [
    "Acme LLC",
    "Zed Inc.",
    "Jane Roe",
    "May 1, 2020",
    "$5,000.00",
    "Section 4.2",
    "Springfield",
    "rent",
    "ACME  llc",
    "Harbor Trust",
];
const TYPES: [EntityType; 4] = [EntityType::Organization, EntityType::Person, EntityType::Date, EntityType::Other];
const LABELS: [&str; 5] = ["shall pay", "pays", "leases to", "owes", "shall deliver"];

#[derive(Debug, Clone)]
struct Spec {
    nodes: Vec<(usize, usize)>,
    edges: Vec<(usize, usize, usize)>,
}

fn spec(max_nodes: usize, max_edges: usize) -> impl Strategy<Value = Spec> {
    prop::collection::vec((0..NAMES.len(), 0..TYPES.len()), 0..=max_nodes).prop_flat_map(move |nodes| {
        let n = nodes.len().max(1);
        let edges = prop::collection::vec((0..n, 0..LABELS.len(), 0..n), 0..=if nodes.is_empty() { 0 } else { max_edges });
        (Just(nodes), edges).prop_map(|(nodes, edges)| Spec { nodes, edges })
    })
}

fn entity(&(name, ty): &(usize, usize)) -> Entity {
    Entity::new(NAMES[name], TYPES[ty])
}

fn build(s: &Spec, origin: Origin) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new(origin);
    for n in &s.nodes {
        g.insert_entity(entity(n));
    }
    for &(a, l, b) in &s.edges {
        g.insert_relation(Relation::new(entity(&s.nodes[a]), LABELS[l], entity(&s.nodes[b])));
    }
    g
}

fn synonyms() -> SynonymTable {
    let mut t = SynonymTable::new();
    t.add("shall pay", "pays");
    t
}

/// Labels that the synonym table above treats as one relation.
fn label_class(label: &str) -> &str {
    match label {
        "pay" | "pays" | "shall pay" => "pay",
        other => other,
    }
}

fn entity_eq(a: &Entity, b: &Entity) -> bool {
    a.etype == b.etype && a.normalized == b.normalized
}

/// Exhaustive pairwise comparison against every reference element.
fn brute_force(ga: &KnowledgeGraph, gc: &KnowledgeGraph, gq: &KnowledgeGraph) -> ((usize, usize), (usize, usize)) {
    let ref_nodes: Vec<&Entity> = gc.nodes().chain(gq.nodes()).collect();
    let ref_edges: Vec<&Relation> = gc.edges().chain(gq.edges()).collect();
    let eg_hits = ga.nodes().filter(|v| ref_nodes.iter().any(|w| entity_eq(v, w))).count();
    let rp_hits = ga
        .edges()
        .filter(|e| {
            ref_edges.iter().any(|r| {
                entity_eq(&e.subject, &r.subject)
                    && entity_eq(&e.object, &r.object)
                    && label_class(&e.label_normalized) == label_class(&r.label_normalized)
            })
        })
        .count();
    ((eg_hits, ga.node_count()), (rp_hits, ga.edge_count()))
}

/// Searches every injective map from response nodes into reference nodes
/// for one that preserves node labels and edges.
fn embeds(ga: &KnowledgeGraph, reference: &KnowledgeGraph) -> bool {
    let src: Vec<&Entity> = ga.nodes().collect();
    let dst: Vec<&Entity> = reference.nodes().collect();
    let ref_edges: BTreeSet<(usize, String, usize)> = reference
        .edges()
        .map(|r| {
            let i = dst.iter().position(|d| entity_eq(d, &r.subject)).unwrap();
            let j = dst.iter().position(|d| entity_eq(d, &r.object)).unwrap();
            (i, label_class(&r.label_normalized).to_string(), j)
        })
        .collect();
    let src_edges: Vec<(usize, String, usize)> = ga
        .edges()
        .map(|r| {
            let i = src.iter().position(|d| entity_eq(d, &r.subject)).unwrap();
            let j = src.iter().position(|d| entity_eq(d, &r.object)).unwrap();
            (i, label_class(&r.label_normalized).to_string(), j)
        })
        .collect();

    fn search(
        k: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        src: &[&Entity],
        dst: &[&Entity],
        src_edges: &[(usize, String, usize)],
        ref_edges: &BTreeSet<(usize, String, usize)>,
    ) -> bool {
        if k == src.len() {
            return src_edges.iter().all(|(i, l, j)| ref_edges.contains(&(map[*i], l.clone(), map[*j])));
        }
        for t in 0..dst.len() {
            if !used[t] && entity_eq(src[k], dst[t]) {
                used[t] = true;
                map.push(t);
                if search(k + 1, map, used, src, dst, src_edges, ref_edges) {
                    return true;
                }
                map.pop();
                used[t] = false;
            }
        }
        false
    }
    search(0, &mut Vec::new(), &mut vec![false; dst.len()], &src, &dst, &src_edges, &ref_edges)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn sub_selection_is_certified_and_fully_grounded(
        c in spec(8, 12),
        q in spec(4, 4),
        node_mask in prop::collection::vec(any::<bool>(), 12),
        edge_mask in prop::collection::vec(any::<bool>(), 16),
        pick in any::<prop::sample::Index>(),
    ) {
        let syn = synonyms();
        let gc = build(&c, Origin::Context);
        let gq = build(&q, Origin::Query);
        let union = gc.union(&gq);
        prop_assume!(union.node_count() > 0);

        let mut ga = KnowledgeGraph::new(Origin::Response);
        let nodes: Vec<&Entity> = union.nodes().collect();
        for (v, keep) in nodes.iter().zip(node_mask.iter().cycle()) {
            if *keep {
                ga.insert_entity((*v).clone());
            }
        }
        ga.insert_entity(nodes[pick.index(nodes.len())].clone());
        for (e, keep) in union.edges().zip(edge_mask.iter().cycle()) {
            if *keep {
                ga.insert_relation(e.clone());
            }
        }

        prop_assert!(check_subgraph_certificate(&ga, &gc, &gq, &syn));
        prop_assert_eq!(entity_grounding(&ga, &gc, &gq).value, Some(1.0));
        let rp = relation_preservation(&ga, &gc, &gq, &syn);
        prop_assert!(rp.value.is_none() || rp.value == Some(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn metrics_equal_exhaustive_matching(a in spec(8, 10), c in spec(8, 10), q in spec(4, 4)) {
        let syn = synonyms();
        let (ga, gc, gq) = (build(&a, Origin::Response), build(&c, Origin::Context), build(&q, Origin::Query));
        let (eg, rp) = brute_force(&ga, &gc, &gq);
        prop_assert_eq!(entity_grounding(&ga, &gc, &gq).fraction(), Some(eg));
        prop_assert_eq!(relation_preservation(&ga, &gc, &gq, &syn).fraction(), Some(rp));
        prop_assert_eq!(check_subgraph_certificate(&ga, &gc, &gq, &syn), embeds(&ga, &gc.union(&gq)));
    }

    #[test]
    fn edgeless_response_reduces_composite_to_grounding(a in spec(8, 0), c in spec(8, 10)) {
        let syn = synonyms();
        let (ga, gc, gq) = (build(&a, Origin::Response), build(&c, Origin::Context), KnowledgeGraph::new(Origin::Query));
        let s = align(&ga, &gc, &gq, &syn, 0.7);
        prop_assert!(!s.rp.is_defined());
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            prop_assert_eq!(s.cfi_at(alpha).value, s.eg.value);
        }
    }

    #[test]
    fn composite_lies_between_components(
        eg in (0usize..20, 1usize..20),
        rp in (0usize..20, 1usize..20),
        alpha in 0.0f64..=1.0,
    ) {
        let eg = hallugraph_core::metrics::MetricValue::ratio(eg.0.min(eg.1), eg.1);
        let rp = hallugraph_core::metrics::MetricValue::ratio(rp.0.min(rp.1), rp.1);
        let v = composite_fidelity(eg, rp, alpha).value.unwrap();
        let (lo, hi) = (eg.value.unwrap().min(rp.value.unwrap()), eg.value.unwrap().max(rp.value.unwrap()));
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn alignment_partitions_the_response(a in spec(8, 10), c in spec(8, 10)) {
        let syn = synonyms();
        let (ga, gc, gq) = (build(&a, Origin::Response), build(&c, Origin::Context), KnowledgeGraph::new(Origin::Query));
        let s = align(&ga, &gc, &gq, &syn, 0.7);
        prop_assert_eq!(s.matched_entities.len() + s.unmatched_entities.len(), ga.node_count());
        prop_assert_eq!(s.supported_edges.len() + s.unsupported_edges.len(), ga.edge_count());
        prop_assert!(s.matched_entities.iter().all(|e| gc.contains_key(&e.key())));
        prop_assert!(s.unmatched_entities.iter().all(|e| !gc.contains_key(&e.key())));
    }
}
