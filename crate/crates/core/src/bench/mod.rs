//! Synthetic benchmark: corpus generation, hallucination operators and
//! evaluation.

pub mod corpus;
pub mod evaluate;
pub mod generate;
pub mod perturb;
pub mod stats;

pub use corpus::{read_corpus_jsonl, write_corpus_jsonl, CorpusInstance, DocKind, Perturbation, PerturbationKind};
pub use evaluate::{
    ne_overlap_baseline, regime_sweep, run_bench, score_corpus, BenchOptions, BenchResult, DatasetResult, RegimeRow,
    ScoredPair, Scorer, DEFAULT_REGIMES,
};
pub use generate::{generate_corpus, GeneratorConfig, IntDist};
