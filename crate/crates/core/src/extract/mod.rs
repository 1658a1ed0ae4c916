//! Triple extraction backends and graph construction.
//!
//! Three interchangeable sources produce `(subject, relation, object)`
//! triples: the built-in pattern extractor, a JSON-lines file of
//! pre-extracted triples, and a chat-completion endpoint serving a small
//! instruction-tuned model.

mod build;
mod builtin;
mod ingest;
mod remote;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use build::{build_graph, build_graph_with, link_triples};
pub use builtin::{extract_builtin, split_sentences};
pub use ingest::{ingest_triples, ingest_triples_str, write_triples_jsonl, IngestReport, LineError};
pub use remote::{parse_triple_reply, ParsedReply, RemoteExtractor};

use crate::graph::Span;

/// Environment variable that overrides the remote endpoint URL.
pub const EXTRACTOR_URL_ENV: &str = "HALLUGRAPH_EXTRACTOR_URL";

pub const DEFAULT_PROMPT_TEMPLATE: &str = r#"You extract knowledge-graph triples from legal text.
Return ONLY a JSON array. Each element must be an object with exactly three
non-empty string fields, matching this JSON schema:
{"type":"array","items":{"type":"object","required":["subject","relation","object"],
"properties":{"subject":{"type":"string"},"relation":{"type":"string"},"object":{"type":"string"}}}}
Use the parties, dates, amounts, citations and provisions as they are written
in the text. Use the verb phrase of the text as the relation (for example
"shall pay", "held that", "pursuant to"). Return [] if there are no relations.

TEXT:
{document}"#;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

impl RawTriple {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        RawTriple { subject: subject.into(), relation: relation.into(), object: object.into(), span: None }
    }

    /// All three fields are non-empty after trimming.
    pub fn is_valid(&self) -> bool {
        !self.subject.trim().is_empty() && !self.relation.trim().is_empty() && !self.object.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Builtin,
    File,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "builtin" => Ok(Backend::Builtin),
            "file" => Ok(Backend::File),
            "remote" => Ok(Backend::Remote),
            other => Err(format!("unknown backend {other:?} (expected builtin, file or remote)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub backend: Backend,
    pub remote_url: Option<String>,
    pub remote_model: Option<String>,
    #[serde(with = "duration_ms")]
    pub timeout: Duration,
    pub max_retries: u32,
    #[serde(with = "duration_ms")]
    pub retry_backoff: Duration,
    pub max_in_flight: usize,
    pub prompt_template: String,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            backend: Backend::Builtin,
            remote_url: None,
            remote_model: None,
            timeout: Duration::from_secs(60),
            max_retries: 2,
            retry_backoff: Duration::from_millis(250),
            max_in_flight: 4,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.to_string(),
        }
    }
}

impl ExtractorConfig {
    /// Fills `remote_url` from the environment when it is not set.
    pub fn with_env(mut self) -> Self {
        if self.remote_url.is_none() {
            self.remote_url = std::env::var(EXTRACTOR_URL_ENV).ok().filter(|s| !s.is_empty());
        }
        self
    }
}

/// Where the edges of one graph come from.
#[derive(Debug, Clone, Copy)]
pub enum TripleSource<'a> {
    Builtin,
    File(&'a std::path::Path),
    Remote(&'a RemoteExtractor),
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}
