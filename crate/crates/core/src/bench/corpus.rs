use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::graph::Entity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Lease,
    Opinion,
}

impl DocKind {
    /// Dataset name used in result tables.
    pub fn dataset(self) -> &'static str {
        match self {
            DocKind::Lease => "Legal Contract QA",
            DocKind::Opinion => "Legal Case QA",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::Lease => "lease",
            DocKind::Opinion => "opinion",
        }
    }
}

impl std::str::FromStr for DocKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lease" => Ok(DocKind::Lease),
            "opinion" => Ok(DocKind::Opinion),
            other => Err(format!("unknown document kind {other:?} (expected lease or opinion)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    EntitySubstitution,
    LogicalContradiction,
}

/// What was changed to turn the factual response into a hallucinated one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub original: String,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallucinatedResponse {
    pub text: String,
    pub perturbation: Perturbation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInstance {
    pub id: String,
    pub doc_kind: DocKind,
    pub doc_id: usize,
    pub context: String,
    pub query: String,
    pub factual_response: String,
    pub hallucinated_responses: Vec<HallucinatedResponse>,
    /// Entities of the full generated document, in first-mention order.
    pub planted_entities: Vec<Entity>,
}

pub fn write_corpus_jsonl<W: Write>(mut w: W, corpus: &[CorpusInstance]) -> std::io::Result<()> {
    for inst in corpus {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_corpus_jsonl<R: BufRead>(r: R) -> Result<Vec<CorpusInstance>, BenchError> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line.map_err(|e| BenchError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let inst = serde_json::from_str(&line).map_err(|e| BenchError::Io(format!("line {}: {e}", idx + 1)))?;
        out.push(inst);
    }
    Ok(out)
}
