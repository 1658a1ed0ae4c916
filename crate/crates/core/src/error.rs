use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph json: {0}")]
    Json(String),
    #[error("graph schema violation: {0}")]
    Schema(String),
    #[error("unknown field {field:?} in {context}")]
    UnknownField { field: String, context: String },
    #[error("edge endpoint {0:?} is not a node")]
    DanglingEndpoint(String),
    #[error("edge endpoint {0:?} matches several nodes; add an *_etype field")]
    AmbiguousEndpoint(String),
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("extractor endpoint unreachable after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String, raw_reply: Option<String> },
    #[error("extractor reply contains no triple array after {attempts} attempt(s)")]
    MalformedResponse { attempts: u32, raw_reply: String },
    #[error("extractor configuration: {0}")]
    Config(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid pattern file line {line}: {message}")]
    Pattern { line: usize, message: String },
    #[error("invalid synonym table: {0}")]
    Synonyms(String),
}

impl ExtractError {
    /// Raw model reply kept for the audit trail, if one was received.
    pub fn raw_reply(&self) -> Option<&str> {
        match self {
            ExtractError::Transport { raw_reply, .. } => raw_reply.as_deref(),
            ExtractError::MalformedResponse { raw_reply, .. } => Some(raw_reply),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("score list for one class is empty")]
    EmptyClass,
    #[error("all paired differences are zero")]
    AllZeroDiffs,
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("grid step must lie in (0, 0.5]")]
    InvalidGridStep,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("generator configuration: {0}")]
    Config(String),
    #[error("response contains no substitutable planted entity")]
    NoSubstitutableEntity,
    #[error("response contains no numeric fact")]
    NoNumericFact,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("corpus i/o: {0}")]
    Io(String),
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

impl VerifyError {
    /// The remote extractor could not be reached or returned no triples.
    pub fn is_backend_failure(&self) -> bool {
        matches!(self, VerifyError::Extract(ExtractError::Transport { .. } | ExtractError::MalformedResponse { .. }))
    }
}
