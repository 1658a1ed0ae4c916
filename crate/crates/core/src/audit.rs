//! Guardrail decisions and their audit trail.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::graph::Span;
use crate::metrics::{AlignmentScores, MetricValue};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Sparse,
}

/// What the caller of the guardrail should do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "re-retrieve")]
    ReRetrieve,
    #[serde(rename = "escalate")]
    Escalate,
}

impl Verdict {
    pub fn action(self) -> Action {
        match self {
            Verdict::Pass => Action::Pass,
            Verdict::Fail => Action::ReRetrieve,
            Verdict::Sparse => Action::Escalate,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Sparse => "SPARSE",
        }
    }
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Pass => "pass",
            Action::ReRetrieve => "re-retrieve",
            Action::Escalate => "escalate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    MissingEntity,
    UnsupportedRelation,
    SparseGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFinding {
    pub kind: FindingKind,
    /// The response-graph element the finding is about.
    pub subject: String,
    pub message: String,
    #[serde(default)]
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub action: Action,
    pub cfi: Option<f64>,
    pub eg: Option<f64>,
    pub rp: Option<f64>,
    pub alpha: f64,
    pub threshold: f64,
    pub counts: Counts,
    pub findings: Vec<AuditFinding>,
}

/// Numerators and supports of the two exact metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub entities_matched: usize,
    pub entities: usize,
    pub edges_supported: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            other => Err(format!("unknown report format {other:?} (expected json or text)")),
        }
    }
}

fn verdict_for(cfi: &MetricValue, threshold: f64) -> Verdict {
    match cfi.value {
        None => Verdict::Sparse,
        Some(v) if v >= threshold => Verdict::Pass,
        Some(_) => Verdict::Fail,
    }
}

pub fn build_report(scores: &AlignmentScores, threshold: f64) -> Decision {
    let verdict = verdict_for(&scores.cfi, threshold);
    let mut findings = Vec::new();
    for e in &scores.unmatched_entities {
        findings.push(AuditFinding {
            kind: FindingKind::MissingEntity,
            subject: e.surface.clone(),
            message: format!("{} \"{}\" is not in the context or query", e.etype, e.surface),
            span: None,
        });
    }
    for r in &scores.unsupported_edges {
        let ungrounded: Vec<&str> = [&r.subject, &r.object]
            .into_iter()
            .filter(|x| scores.unmatched_entities.iter().any(|u| u == *x))
            .map(|x| x.surface.as_str())
            .collect();
        let reason = if ungrounded.is_empty() {
            "no source edge links these entities with a compatible relation".to_string()
        } else {
            format!("endpoint not grounded: {}", ungrounded.join(", "))
        };
        findings.push(AuditFinding {
            kind: FindingKind::UnsupportedRelation,
            subject: r.to_string(),
            message: format!(
                "relation \"{}\" from \"{}\" to \"{}\" is not supported; {reason}",
                r.label_surface, r.subject.surface, r.object.surface
            ),
            span: r.provenance,
        });
    }
    if verdict == Verdict::Sparse {
        findings.push(AuditFinding {
            kind: FindingKind::SparseGraph,
            subject: "response graph".into(),
            message: format!(
                "response graph has {} node(s) and {} edge(s); too little structure to score",
                scores.response_nodes, scores.response_edges
            ),
            span: None,
        });
    }
    Decision {
        verdict,
        action: verdict.action(),
        cfi: scores.cfi.value,
        eg: scores.eg.value,
        rp: scores.rp.value,
        alpha: scores.alpha,
        threshold,
        counts: Counts {
            entities_matched: scores.matched_entities.len(),
            entities: scores.response_nodes,
            edges_supported: scores.supported_edges.len(),
            edges: scores.response_edges,
        },
        findings,
    }
}

impl Decision {
    pub fn from_json_str(s: &str) -> Result<Decision, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("decision serializes")
    }
}

pub fn render_report(d: &Decision, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(d).expect("decision serializes"),
        ReportFormat::Text => render_text(d),
    }
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"))
}

fn render_text(d: &Decision) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} (action: {})", d.verdict.as_str(), d.action.as_str());
    let _ = writeln!(
        out,
        "CFI {}  EG {} ({}/{})  RP {} ({}/{})  alpha {:.2}  threshold {:.2}",
        fmt_metric(d.cfi),
        fmt_metric(d.eg),
        d.counts.entities_matched,
        d.counts.entities,
        fmt_metric(d.rp),
        d.counts.edges_supported,
        d.counts.edges,
        d.alpha,
        d.threshold
    );
    for (kind, title) in [
        (FindingKind::MissingEntity, "Missing entities"),
        (FindingKind::UnsupportedRelation, "Unsupported relations"),
        (FindingKind::SparseGraph, "Sparse graph"),
    ] {
        let group: Vec<&AuditFinding> = d.findings.iter().filter(|f| f.kind == kind).collect();
        if group.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}:");
        for f in group {
            let _ = writeln!(out, "  - {}", f.message);
        }
    }
    out
}
