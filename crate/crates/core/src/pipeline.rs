//! End-to-end verification shared by the CLI and the HTTP service.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audit::{build_report, Decision, DEFAULT_THRESHOLD};
use crate::error::VerifyError;
use crate::extract::{build_graph_with, Backend, ExtractorConfig, RemoteExtractor, TripleSource};
use crate::graph::{KnowledgeGraph, Origin};
use crate::metrics::{align, AlignmentScores, SynonymTable, DEFAULT_ALPHA};
use crate::ner::Recognizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyRequest {
    pub context: String,
    #[serde(default)]
    pub query: String,
    pub response: String,
    #[serde(default)]
    pub options: RequestOptions,
}

/// Per-request overrides of the verifier defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    /// Path of a JSON synonym table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<PathBuf>,
    /// Triple files for the file backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<TripleFiles>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleFiles {
    #[serde(default)]
    pub context: Option<PathBuf>,
    #[serde(default)]
    pub query: Option<PathBuf>,
    #[serde(default)]
    pub response: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct VerifierSettings {
    pub alpha: f64,
    pub threshold: f64,
    pub synonyms: SynonymTable,
    pub recognizer: Recognizer,
    pub extractor: ExtractorConfig,
}

impl Default for VerifierSettings {
    fn default() -> Self {
        VerifierSettings {
            alpha: DEFAULT_ALPHA,
            threshold: DEFAULT_THRESHOLD,
            synonyms: SynonymTable::new(),
            recognizer: Recognizer::default(),
            extractor: ExtractorConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub decision: Decision,
    pub scores: AlignmentScores,
    pub context_graph: KnowledgeGraph,
    pub query_graph: KnowledgeGraph,
    pub response_graph: KnowledgeGraph,
}

/// Prebuilt graphs that replace extraction for their origin.
#[derive(Debug, Clone, Default)]
pub struct GraphOverrides {
    pub context: Option<KnowledgeGraph>,
    pub query: Option<KnowledgeGraph>,
    pub response: Option<KnowledgeGraph>,
}

/// Stateless verifier; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Verifier {
    settings: VerifierSettings,
    remote: Option<Arc<RemoteExtractor>>,
}

fn check_unit(name: &str, v: f64) -> Result<f64, VerifyError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(VerifyError::Invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl Verifier {
    pub fn new(settings: VerifierSettings) -> Result<Self, VerifyError> {
        check_unit("alpha", settings.alpha)?;
        check_unit("threshold", settings.threshold)?;
        let remote = match settings.extractor.remote_url {
            Some(_) => Some(Arc::new(RemoteExtractor::from_config(&settings.extractor)?)),
            None if settings.extractor.backend == Backend::Remote => {
                return Err(VerifyError::Invalid("remote backend requires an extractor URL".into()))
            }
            None => None,
        };
        Ok(Verifier { settings, remote })
    }

    pub fn settings(&self) -> &VerifierSettings {
        &self.settings
    }

    pub fn verify(&self, req: &VerifyRequest) -> Result<Verification, VerifyError> {
        self.verify_with(req, GraphOverrides::default())
    }

    pub fn verify_with(&self, req: &VerifyRequest, graphs: GraphOverrides) -> Result<Verification, VerifyError> {
        if req.context.trim().is_empty() && graphs.context.is_none() {
            return Err(VerifyError::Invalid("context must be non-empty".into()));
        }
        if req.response.trim().is_empty() && graphs.response.is_none() {
            return Err(VerifyError::Invalid("response must be non-empty".into()));
        }
        let opts = &req.options;
        let alpha = check_unit("alpha", opts.alpha.unwrap_or(self.settings.alpha))?;
        let threshold = check_unit("threshold", opts.threshold.unwrap_or(self.settings.threshold))?;
        let backend = opts.backend.unwrap_or(self.settings.extractor.backend);
        let loaded;
        let synonyms = match &opts.synonyms {
            Some(path) => {
                loaded = SynonymTable::from_file(path).map_err(|e| VerifyError::Invalid(e.to_string()))?;
                &loaded
            }
            None => &self.settings.synonyms,
        };
        let files = opts.triples.clone().unwrap_or_default();

        let graph = |text: &str, origin: Origin, file: &Option<PathBuf>| -> Result<KnowledgeGraph, VerifyError> {
            let source = match backend {
                Backend::Builtin => TripleSource::Builtin,
                Backend::Remote => TripleSource::Remote(
                    self.remote
                        .as_deref()
                        .ok_or_else(|| VerifyError::Invalid("remote backend requires an extractor URL".into()))?,
                ),
                Backend::File => match file {
                    Some(p) => TripleSource::File(p),
                    None if origin == Origin::Query && text.trim().is_empty() => return Ok(KnowledgeGraph::new(origin)),
                    None => {
                        return Err(VerifyError::Invalid(format!(
                            "file backend requires a triple file for the {}",
                            origin.as_str()
                        )))
                    }
                },
            };
            if text.trim().is_empty() && !matches!(source, TripleSource::File(_)) {
                return Ok(KnowledgeGraph::new(origin));
            }
            Ok(build_graph_with(text, origin, source, &self.settings.recognizer)?)
        };

        let context_graph = match graphs.context {
            Some(g) => g,
            None => graph(&req.context, Origin::Context, &files.context)?,
        };
        let query_graph = match graphs.query {
            Some(g) => g,
            None => graph(&req.query, Origin::Query, &files.query)?,
        };
        let response_graph = match graphs.response {
            Some(g) => g,
            None => graph(&req.response, Origin::Response, &files.response)?,
        };
        let scores = align(&response_graph, &context_graph, &query_graph, synonyms, alpha);
        let decision = build_report(&scores, threshold);
        Ok(Verification { decision, scores, context_graph, query_graph, response_graph })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::Verdict;

    fn req(context: &str, query: &str, response: &str) -> VerifyRequest {
        VerifyRequest { context: context.into(), query: query.into(), response: response.into(), options: Default::default() }
    }

    #[test]
    fn faithful_and_substituted() {
        let v = Verifier::new(VerifierSettings::default()).unwrap();
        let ctx = "Westfield Properties LLC shall lease Suite 400 to Harbor Coffee Inc. \
                   Harbor Coffee Inc. shall pay $12,500 on March 1, 2024.";
        let ok = v.verify(&req(ctx, "", "Harbor Coffee Inc. shall pay $12,500 on March 1, 2024.")).unwrap();
        assert_eq!(ok.decision.verdict, Verdict::Pass);
        let bad = v.verify(&req(ctx, "", "Parkview Realty Inc. shall pay $12,500 on March 1, 2024.")).unwrap();
        assert_eq!(bad.decision.verdict, Verdict::Fail);
    }

    #[test]
    fn short_contentless_response_is_sparse() {
        let v = Verifier::new(VerifierSettings::default()).unwrap();
        let out = v.verify(&req("Landlord shall maintain the premises.", "", "yes, that is right as far as i know")).unwrap();
        assert_eq!(out.decision.verdict, Verdict::Sparse);
    }

    #[test]
    fn rejects_bad_requests() {
        let v = Verifier::new(VerifierSettings::default()).unwrap();
        assert!(matches!(v.verify(&req("", "", "x")), Err(VerifyError::Invalid(_))));
        let mut r = req("a", "", "b");
        r.options.alpha = Some(1.5);
        assert!(matches!(v.verify(&r), Err(VerifyError::Invalid(_))));
        r.options.alpha = None;
        r.options.backend = Some(Backend::Remote);
        assert!(matches!(v.verify(&r), Err(VerifyError::Invalid(_))));
        assert!(serde_json::from_str::<VerifyRequest>(r#"{"context":"a","response":"b","extra":1}"#).is_err());
    }
}
