//! Scores a corpus with the alignment metrics and a named-entity overlap
//! baseline, then summarizes separation per dataset and per length regime.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{CorpusInstance, DocKind, PerturbationKind};
use super::generate::{generate_corpus, GeneratorConfig, IntDist};
use super::stats::{auc_defined, wilcoxon_signed_rank, Alternative, AucOutcome, WilcoxonResult};
use crate::error::{BenchError, StatsError};
use crate::extract::{build_graph, TripleSource};
use crate::graph::{EntityKey, KnowledgeGraph, Origin};
use crate::metrics::{align, composite_fidelity, tune_alpha_components, MetricValue, SynonymTable, DEFAULT_ALPHA};
use crate::ner::entity_set;

/// Reference graphs with fewer distinct entities than this are sparse.
pub const SPARSE_MIN_REFERENCE_NODES: usize = 10;

/// Jaccard overlap between the response's entities and those of context
/// and query together; zero when both sides are empty.
pub fn ne_overlap_baseline(response: &str, context: &str, query: &str) -> f64 {
    let a = entity_set(response);
    let mut b = entity_set(context);
    b.extend(entity_set(query));
    jaccard(&a, &b)
}

fn jaccard(a: &BTreeSet<EntityKey>, b: &BTreeSet<EntityKey>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseScores {
    pub eg: MetricValue,
    pub rp: MetricValue,
    pub cfi: MetricValue,
    pub ne: f64,
    pub sparse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub id: String,
    pub doc_kind: DocKind,
    pub perturbation: PerturbationKind,
    pub factual: ResponseScores,
    pub hallucinated: ResponseScores,
    pub context_words: usize,
    pub context_entities: usize,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub alpha: f64,
    pub synonyms: SynonymTable,
    pub grid_step: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { alpha: DEFAULT_ALPHA, synonyms: SynonymTable::new(), grid_step: 0.05 }
    }
}

fn score_response(
    response: &str,
    context: &str,
    query: &str,
    gc: &KnowledgeGraph,
    gq: &KnowledgeGraph,
    reference_nodes: usize,
    opts: &BenchOptions,
) -> Result<ResponseScores, BenchError> {
    let ga = build_graph(response, Origin::Response, TripleSource::Builtin)?;
    let s = align(&ga, gc, gq, &opts.synonyms, opts.alpha);
    let sparse = reference_nodes < SPARSE_MIN_REFERENCE_NODES || ga.edge_count() == 0 || !s.cfi.is_defined();
    Ok(ResponseScores { eg: s.eg, rp: s.rp, cfi: s.cfi, ne: ne_overlap_baseline(response, context, query), sparse })
}

/// Scores every (factual, hallucinated) pair of the corpus. Output order
/// follows the corpus.
pub fn score_corpus(corpus: &[CorpusInstance], opts: &BenchOptions) -> Result<Vec<ScoredPair>, BenchError> {
    let contexts: Vec<&str> = {
        let mut seen = BTreeSet::new();
        corpus.iter().map(|i| i.context.as_str()).filter(|c| seen.insert(*c)).collect()
    };
    let graphs: HashMap<&str, KnowledgeGraph> = contexts
        .par_iter()
        .map(|c| build_graph(c, Origin::Context, TripleSource::Builtin).map(|g| (*c, g)))
        .collect::<Result<_, _>>()?;

    let per_instance: Vec<Vec<ScoredPair>> = corpus
        .par_iter()
        .map(|inst| -> Result<Vec<ScoredPair>, BenchError> {
            let gc = &graphs[inst.context.as_str()];
            let gq = build_graph(&inst.query, Origin::Query, TripleSource::Builtin)?;
            let reference_nodes = gc.union(&gq).node_count();
            let score = |r: &str| score_response(r, &inst.context, &inst.query, gc, &gq, reference_nodes, opts);
            let factual = score(&inst.factual_response)?;
            let context_words = inst.context.split_whitespace().count();
            let context_entities = entity_set(&inst.context).len();
            inst.hallucinated_responses
                .iter()
                .enumerate()
                .map(|(k, h)| {
                    Ok(ScoredPair {
                        id: if inst.hallucinated_responses.len() == 1 { inst.id.clone() } else { format!("{}-h{k}", inst.id) },
                        doc_kind: inst.doc_kind,
                        perturbation: h.perturbation.kind,
                        factual,
                        hallucinated: score(&h.text)?,
                        context_words,
                        context_entities,
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    Cfi,
    Eg,
    Rp,
    NeOverlap,
}

impl Scorer {
    pub const ALL: [Scorer; 4] = [Scorer::Cfi, Scorer::Eg, Scorer::Rp, Scorer::NeOverlap];

    pub fn as_str(self) -> &'static str {
        match self {
            Scorer::Cfi => "cfi",
            Scorer::Eg => "eg",
            Scorer::Rp => "rp",
            Scorer::NeOverlap => "ne_overlap",
        }
    }

    fn value(self, s: &ResponseScores) -> Option<f64> {
        match self {
            Scorer::Cfi => s.cfi.value,
            Scorer::Eg => s.eg.value,
            Scorer::Rp => s.rp.value,
            Scorer::NeOverlap => Some(s.ne),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSummary {
    pub scorer: Scorer,
    pub auc: AucOutcome,
    /// Factual minus hallucinated score, one-sided.
    pub wilcoxon: Option<WilcoxonResult>,
    pub mean_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetResult {
    pub dataset: String,
    pub doc_kind: DocKind,
    pub pairs: usize,
    pub substitutions: usize,
    pub contradictions: usize,
    pub scorers: Vec<ScorerSummary>,
    /// AUC of the composite minus AUC of the entity-overlap baseline.
    pub delta_cfi_vs_ne: f64,
    /// Per-pair composite margin minus baseline margin, one-sided.
    pub wilcoxon_cfi_vs_ne: Option<WilcoxonResult>,
    pub tuned_alpha: Option<f64>,
    pub auc_at_tuned_alpha: Option<f64>,
    pub sparse_fraction: f64,
}

impl DatasetResult {
    pub fn scorer(&self, s: Scorer) -> &ScorerSummary {
        self.scorers.iter().find(|x| x.scorer == s).expect("all scorers summarized")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub alpha: f64,
    pub datasets: Vec<DatasetResult>,
}

fn wilcoxon_or_none(diffs: &[f64]) -> Result<Option<WilcoxonResult>, BenchError> {
    match wilcoxon_signed_rank(diffs, Alternative::Greater) {
        Ok(w) => Ok(Some(w)),
        Err(StatsError::AllZeroDiffs | StatsError::EmptyClass) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Summarizes scored pairs of one document kind.
pub fn summarize(kind: DocKind, pairs: &[ScoredPair], opts: &BenchOptions) -> Result<DatasetResult, BenchError> {
    let mut scorers = Vec::new();
    for s in Scorer::ALL {
        let pos: Vec<Option<f64>> = pairs.iter().map(|p| s.value(&p.factual)).collect();
        let neg: Vec<Option<f64>> = pairs.iter().map(|p| s.value(&p.hallucinated)).collect();
        let margins: Vec<f64> = pairs
            .iter()
            .filter_map(|p| Some(s.value(&p.factual)? - s.value(&p.hallucinated)?))
            .collect();
        scorers.push(ScorerSummary {
            scorer: s,
            auc: auc_defined(&pos, &neg)?,
            wilcoxon: wilcoxon_or_none(&margins)?,
            mean_margin: mean(&margins),
        });
    }
    let gain: Vec<f64> = pairs
        .iter()
        .filter_map(|p| {
            let cfi = p.factual.cfi.value? - p.hallucinated.cfi.value?;
            Some(cfi - (p.factual.ne - p.hallucinated.ne))
        })
        .collect();

    let labeled: Vec<(MetricValue, MetricValue, bool)> = pairs
        .iter()
        .flat_map(|p| [(p.factual.eg, p.factual.rp, true), (p.hallucinated.eg, p.hallucinated.rp, false)])
        .collect();
    let tuned_alpha = match tune_alpha_components(&labeled, opts.grid_step) {
        Ok(a) => Some(a),
        Err(StatsError::DegenerateLabels | StatsError::EmptyClass) => None,
        Err(e) => return Err(e.into()),
    };
    let auc_at_tuned_alpha = match tuned_alpha {
        Some(a) => {
            let at = |s: &ResponseScores| composite_fidelity(s.eg, s.rp, a).value;
            let pos: Vec<_> = pairs.iter().map(|p| at(&p.factual)).collect();
            let neg: Vec<_> = pairs.iter().map(|p| at(&p.hallucinated)).collect();
            Some(auc_defined(&pos, &neg)?.auc)
        }
        None => None,
    };
    let cfi_auc = scorers[0].auc.auc;
    let ne_auc = scorers[3].auc.auc;
    Ok(DatasetResult {
        dataset: kind.dataset().to_string(),
        doc_kind: kind,
        pairs: pairs.len(),
        substitutions: pairs.iter().filter(|p| p.perturbation == PerturbationKind::EntitySubstitution).count(),
        contradictions: pairs.iter().filter(|p| p.perturbation == PerturbationKind::LogicalContradiction).count(),
        scorers,
        delta_cfi_vs_ne: cfi_auc - ne_auc,
        wilcoxon_cfi_vs_ne: wilcoxon_or_none(&gain)?,
        tuned_alpha,
        auc_at_tuned_alpha,
        sparse_fraction: sparse_fraction(pairs),
    })
}

/// Share of pairs whose factual response falls in the sparse regime.
pub fn sparse_fraction(pairs: &[ScoredPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().filter(|p| p.factual.sparse).count() as f64 / pairs.len() as f64
}

pub fn run_bench(corpus: &[CorpusInstance], opts: &BenchOptions) -> Result<(BenchResult, Vec<ScoredPair>), BenchError> {
    let pairs = score_corpus(corpus, opts)?;
    let kinds: BTreeSet<DocKind> = pairs.iter().map(|p| p.doc_kind).collect();
    let mut datasets = Vec::new();
    for kind in kinds {
        let subset: Vec<ScoredPair> = pairs.iter().filter(|p| p.doc_kind == kind).cloned().collect();
        datasets.push(summarize(kind, &subset, opts)?);
    }
    Ok((BenchResult { alpha: opts.alpha, datasets }, pairs))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

impl BenchResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// One row per dataset and scorer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,scorer,auc,n_pos,n_neg,excluded_pos,excluded_neg,mean_margin,wilcoxon_w,wilcoxon_p,tuned_alpha,sparse_fraction\n");
        for d in &self.datasets {
            for s in &d.scorers {
                let _ = writeln!(
                    out,
                    "{},{},{:.4},{},{},{},{},{},{},{},{},{:.4}",
                    d.dataset,
                    s.scorer.as_str(),
                    s.auc.auc,
                    s.auc.n_pos,
                    s.auc.n_neg,
                    s.auc.excluded_pos,
                    s.auc.excluded_neg,
                    fmt_opt(s.mean_margin),
                    s.wilcoxon.map(|w| format!("{:.1}", w.statistic)).unwrap_or_default(),
                    s.wilcoxon.map(|w| format!("{:.3e}", w.p_value)).unwrap_or_default(),
                    fmt_opt(d.tuned_alpha),
                    d.sparse_fraction
                );
            }
        }
        out
    }
}

pub fn pairs_to_csv(pairs: &[ScoredPair]) -> String {
    let mut out = String::from("id,dataset,perturbation,factual_cfi,halluc_cfi,factual_eg,halluc_eg,factual_rp,halluc_rp,factual_ne,halluc_ne,factual_sparse\n");
    for p in pairs {
        let kind = match p.perturbation {
            PerturbationKind::EntitySubstitution => "entity_substitution",
            PerturbationKind::LogicalContradiction => "logical_contradiction",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.4},{:.4},{}",
            p.id,
            p.doc_kind.as_str(),
            kind,
            fmt_opt(p.factual.cfi.value),
            fmt_opt(p.hallucinated.cfi.value),
            fmt_opt(p.factual.eg.value),
            fmt_opt(p.hallucinated.eg.value),
            fmt_opt(p.factual.rp.value),
            fmt_opt(p.hallucinated.rp.value),
            p.factual.ne,
            p.hallucinated.ne,
            p.factual.sparse
        );
    }
    out
}

/// Context-length regimes as (target words, target entities).
pub const DEFAULT_REGIMES: [(u32, u32); 3] = [(85, 6), (200, 13), (450, 28)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub target_words: u32,
    pub target_entities: u32,
    pub mean_words: f64,
    pub mean_entities: f64,
    pub pairs: usize,
    pub auc_cfi: f64,
    pub auc_eg: f64,
    pub auc_rp: f64,
    pub auc_ne: f64,
    pub sparse_fraction: f64,
}

/// Regenerates the corpus of `base` at each regime and scores it. Every
/// regime uses the same documents and questions; only the amount of the
/// document shown as context changes.
pub fn regime_sweep(base: &GeneratorConfig, regimes: &[(u32, u32)], opts: &BenchOptions) -> Result<Vec<RegimeRow>, BenchError> {
    let mut rows = Vec::new();
    for &(words, entities) in regimes {
        let cfg = GeneratorConfig {
            target_words: IntDist { mean: words, spread: base.target_words.spread },
            target_entities: IntDist { mean: entities, spread: base.target_entities.spread },
            ..base.clone()
        };
        let corpus = generate_corpus(&cfg)?;
        let pairs = score_corpus(&corpus, opts)?;
        let auc_of = |s: Scorer| -> Result<f64, BenchError> {
            let pos: Vec<_> = pairs.iter().map(|p| s.value(&p.factual)).collect();
            let neg: Vec<_> = pairs.iter().map(|p| s.value(&p.hallucinated)).collect();
            Ok(auc_defined(&pos, &neg)?.auc)
        };
        let n = pairs.len().max(1) as f64;
        rows.push(RegimeRow {
            target_words: words,
            target_entities: entities,
            mean_words: pairs.iter().map(|p| p.context_words as f64).sum::<f64>() / n,
            mean_entities: pairs.iter().map(|p| p.context_entities as f64).sum::<f64>() / n,
            pairs: pairs.len(),
            auc_cfi: auc_of(Scorer::Cfi)?,
            auc_eg: auc_of(Scorer::Eg)?,
            auc_rp: auc_of(Scorer::Rp)?,
            auc_ne: auc_of(Scorer::NeOverlap)?,
            sparse_fraction: sparse_fraction(&pairs),
        });
    }
    Ok(rows)
}

pub fn regimes_to_csv(rows: &[RegimeRow]) -> String {
    let mut out = String::from("target_words,target_entities,mean_words,mean_entities,pairs,auc_cfi,auc_eg,auc_rp,auc_ne,sparse_fraction\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.1},{:.1},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.target_words, r.target_entities, r.mean_words, r.mean_entities, r.pairs, r.auc_cfi, r.auc_eg, r.auc_rp, r.auc_ne, r.sparse_fraction
        );
    }
    out
}

/// Whitespace-separated columns for gnuplot.
pub fn regimes_to_dat(rows: &[RegimeRow]) -> String {
    let mut out = String::from("# mean_words auc_cfi auc_eg auc_rp auc_ne sparse_fraction\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:.1} {:.4} {:.4} {:.4} {:.4} {:.4}",
            r.mean_words, r.auc_cfi, r.auc_eg, r.auc_rp, r.auc_ne, r.sparse_fraction
        );
    }
    out
}
