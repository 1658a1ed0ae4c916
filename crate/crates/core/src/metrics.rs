//! Alignment of a response graph against the union of context and query
//! graphs: Entity Grounding, Relation Preservation and the Composite
//! Fidelity Index, plus the label-preserving embedding certificate.
//!
//! Grounding and preservation are exact fractions `hits / support`; a zero
//! support makes the metric undefined rather than zero.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::stats::auc_defined;
use crate::error::{ExtractError, StatsError};
use crate::graph::{Entity, EntityKey, KnowledgeGraph, Relation};
use crate::normalize::normalize_label;

pub const DEFAULT_ALPHA: f64 = 0.7;

const CV_FOLDS: usize = 5;
const CV_SEED: u64 = 0x5eed_a1fa;
const TIE_EPS: f64 = 1e-12;

/// A bounded score with the support it was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: Option<f64>,
    pub support: usize,
    /// Numerator for exact fractions; `None` for weighted combinations.
    pub hits: Option<usize>,
}

impl MetricValue {
    pub fn ratio(hits: usize, support: usize) -> Self {
        assert!(hits <= support, "hits {hits} exceed support {support}");
        let value = (support > 0).then(|| hits as f64 / support as f64);
        MetricValue { value, support, hits: Some(hits) }
    }

    pub fn undefined() -> Self {
        MetricValue { value: None, support: 0, hits: None }
    }

    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }

    /// The exact fraction as `(hits, support)`, when this is a ratio.
    pub fn fraction(&self) -> Option<(usize, usize)> {
        self.hits.map(|h| (h, self.support))
    }
}

/// Relation labels treated as interchangeable, keyed by normalized label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    groups: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, a: &str, b: &str) {
        let (a, b) = (normalize_label(a), normalize_label(b));
        self.groups.entry(a.clone()).or_default().insert(b.clone());
        self.groups.entry(b).or_default().insert(a);
    }

    /// Parses a JSON object mapping a label to its equivalent labels.
    pub fn from_json_str(s: &str) -> Result<Self, ExtractError> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(s).map_err(|e| ExtractError::Synonyms(e.to_string()))?;
        let mut table = SynonymTable::new();
        for (label, equivalents) in raw {
            for eq in equivalents {
                table.add(&label, &eq);
            }
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExtractError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ExtractError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }

    pub fn compatible(&self, a: &str, b: &str) -> bool {
        a == b || self.groups.get(a).is_some_and(|s| s.contains(b))
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentScores {
    pub eg: MetricValue,
    pub rp: MetricValue,
    pub cfi: MetricValue,
    pub alpha: f64,
    pub matched_entities: Vec<Entity>,
    pub unmatched_entities: Vec<Entity>,
    pub supported_edges: Vec<Relation>,
    pub unsupported_edges: Vec<Relation>,
    pub response_nodes: usize,
    pub response_edges: usize,
}

impl AlignmentScores {
    /// Recomputes the composite under a different weight.
    pub fn cfi_at(&self, alpha: f64) -> MetricValue {
        composite_fidelity(self.eg, self.rp, alpha)
    }
}

pub fn match_entity(v: &Entity, w: &Entity) -> bool {
    v.etype == w.etype && v.normalized == w.normalized
}

pub fn align_relation(e: &Relation, reference: &Relation, synonyms: &SynonymTable) -> bool {
    match_entity(&e.subject, &reference.subject)
        && match_entity(&e.object, &reference.object)
        && synonyms.compatible(&e.label_normalized, &reference.label_normalized)
}

fn reference_keys(gc: &KnowledgeGraph, gq: &KnowledgeGraph) -> HashSet<EntityKey> {
    gc.nodes().chain(gq.nodes()).map(Entity::key).collect()
}

type EndpointIndex = HashMap<(EntityKey, EntityKey), Vec<String>>;

fn reference_edges(gc: &KnowledgeGraph, gq: &KnowledgeGraph) -> EndpointIndex {
    let mut index: EndpointIndex = HashMap::new();
    for r in gc.edges().chain(gq.edges()) {
        index
            .entry((r.subject.key(), r.object.key()))
            .or_default()
            .push(r.label_normalized.clone());
    }
    index
}

fn is_supported(e: &Relation, index: &EndpointIndex, synonyms: &SynonymTable) -> bool {
    index
        .get(&(e.subject.key(), e.object.key()))
        .is_some_and(|labels| labels.iter().any(|l| synonyms.compatible(&e.label_normalized, l)))
}

/// Fraction of response entities with a type-and-text match in `V_c ∪ V_q`.
pub fn entity_grounding(ga: &KnowledgeGraph, gc: &KnowledgeGraph, gq: &KnowledgeGraph) -> MetricValue {
    let reference = reference_keys(gc, gq);
    let hits = ga.nodes().filter(|v| reference.contains(&v.key())).count();
    MetricValue::ratio(hits, ga.node_count())
}

/// Fraction of response edges aligned to some edge of `E_c ∪ E_q`.
pub fn relation_preservation(
    ga: &KnowledgeGraph,
    gc: &KnowledgeGraph,
    gq: &KnowledgeGraph,
    synonyms: &SynonymTable,
) -> MetricValue {
    let index = reference_edges(gc, gq);
    let hits = ga.edges().filter(|e| is_supported(e, &index, synonyms)).count();
    MetricValue::ratio(hits, ga.edge_count())
}

/// `alpha * EG + (1 - alpha) * RP`. An undefined component is excluded and
/// the defined one carries full weight.
pub fn composite_fidelity(eg: MetricValue, rp: MetricValue, alpha: f64) -> MetricValue {
    let alpha = alpha.clamp(0.0, 1.0);
    let support = eg.support + rp.support;
    match (eg.value, rp.value) {
        (Some(e), Some(r)) => MetricValue {
            value: Some((alpha * e + (1.0 - alpha) * r).clamp(0.0, 1.0)),
            support,
            hits: None,
        },
        (Some(e), None) => MetricValue { value: Some(e), support, hits: None },
        (None, Some(r)) => MetricValue { value: Some(r), support, hits: None },
        (None, None) => MetricValue::undefined(),
    }
}

/// Scores `ga` against `gc ∪ gq` and records which elements matched.
pub fn align(
    ga: &KnowledgeGraph,
    gc: &KnowledgeGraph,
    gq: &KnowledgeGraph,
    synonyms: &SynonymTable,
    alpha: f64,
) -> AlignmentScores {
    let reference = reference_keys(gc, gq);
    let index = reference_edges(gc, gq);
    let (matched_entities, unmatched_entities): (Vec<Entity>, Vec<Entity>) =
        ga.nodes().cloned().partition(|v| reference.contains(&v.key()));
    let (supported_edges, unsupported_edges): (Vec<Relation>, Vec<Relation>) =
        ga.edges().cloned().partition(|e| is_supported(e, &index, synonyms));
    let eg = MetricValue::ratio(matched_entities.len(), ga.node_count());
    let rp = MetricValue::ratio(supported_edges.len(), ga.edge_count());
    AlignmentScores {
        eg,
        rp,
        cfi: composite_fidelity(eg, rp, alpha),
        alpha,
        matched_entities,
        unmatched_entities,
        supported_edges,
        unsupported_edges,
        response_nodes: ga.node_count(),
        response_edges: ga.edge_count(),
    }
}

/// True iff `ga` embeds into `gc ∪ gq` by a label-preserving injective map.
/// Node identity is the label itself, so the map is forced and the check
/// needs no search.
pub fn check_subgraph_certificate(
    ga: &KnowledgeGraph,
    gc: &KnowledgeGraph,
    gq: &KnowledgeGraph,
    synonyms: &SynonymTable,
) -> bool {
    let reference = reference_keys(gc, gq);
    let index = reference_edges(gc, gq);
    ga.nodes().all(|v| reference.contains(&v.key()))
        && ga.edges().all(|e| is_supported(e, &index, synonyms))
}

/// Grid-searches the composite weight by 5-fold cross-validated AUC.
/// Ties go to the weight closest to the default, then to the larger weight.
pub fn tune_alpha(labeled: &[(AlignmentScores, bool)], grid_step: f64) -> Result<f64, StatsError> {
    let pairs: Vec<(MetricValue, MetricValue, bool)> =
        labeled.iter().map(|(s, l)| (s.eg, s.rp, *l)).collect();
    tune_alpha_components(&pairs, grid_step)
}

pub fn tune_alpha_components(
    labeled: &[(MetricValue, MetricValue, bool)],
    grid_step: f64,
) -> Result<f64, StatsError> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(StatsError::InvalidGridStep);
    }
    let positives = labeled.iter().filter(|x| x.2).count();
    if positives == 0 || positives == labeled.len() {
        return Err(StatsError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(CV_SEED));
    let mut folds = vec![Vec::new(); CV_FOLDS];
    for (rank, idx) in order.into_iter().enumerate() {
        folds[rank % CV_FOLDS].push(idx);
    }

    let mut grid: Vec<f64> = Vec::new();
    let steps = (1.0 / grid_step + 1e-9).floor() as usize;
    for k in 0..=steps {
        grid.push(((k as f64 * grid_step) * 1e9).round() / 1e9);
    }
    if grid.last().is_some_and(|&a| (a - 1.0).abs() > 1e-9) {
        grid.push(1.0);
    }

    let mut best: Option<(f64, f64)> = None;
    for &alpha in &grid {
        let Some(score) = mean_fold_auc(labeled, &folds, alpha) else { continue };
        best = match best {
            None => Some((alpha, score)),
            Some((_, s)) if score > s + TIE_EPS => Some((alpha, score)),
            Some((a, s)) if (score - s).abs() <= TIE_EPS && prefer(alpha, a) => Some((alpha, s.max(score))),
            keep => keep,
        };
    }
    best.map(|(a, _)| a).ok_or(StatsError::DegenerateLabels)
}

fn prefer(candidate: f64, incumbent: f64) -> bool {
    let dc = (candidate - DEFAULT_ALPHA).abs();
    let di = (incumbent - DEFAULT_ALPHA).abs();
    if (dc - di).abs() > 1e-9 {
        dc < di
    } else {
        candidate > incumbent
    }
}

fn mean_fold_auc(
    labeled: &[(MetricValue, MetricValue, bool)],
    folds: &[Vec<usize>],
    alpha: f64,
) -> Option<f64> {
    let aucs: Vec<f64> = folds
        .iter()
        .filter_map(|fold| {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for &i in fold {
                let (eg, rp, label) = labeled[i];
                let v = composite_fidelity(eg, rp, alpha).value;
                if label {
                    pos.push(v);
                } else {
                    neg.push(v);
                }
            }
            auc_defined(&pos, &neg).ok().map(|o| o.auc)
        })
        .collect();
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}
