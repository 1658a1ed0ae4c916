//! Hallucination checks for retrieval-augmented generation by aligning
//! knowledge graphs extracted from the context, the query and the response.

pub mod audit;
pub mod bench;
pub mod error;
pub mod extract;
pub mod graph;
pub mod metrics;
pub mod ner;
pub mod normalize;
pub mod pipeline;

pub use error::{BenchError, ExtractError, GraphError, StatsError, VerifyError};
pub use graph::{Entity, EntityKey, EntityType, KnowledgeGraph, Origin, Relation, Span};
