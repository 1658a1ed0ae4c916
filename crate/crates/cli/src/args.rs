use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hallugraph_core::extract::{Backend, EXTRACTOR_URL_ENV};

#[derive(Debug, Parser)]
#[command(name = "hallugraph", version, about = "Knowledge-graph alignment checks for retrieval-augmented legal answers")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Values given here override the
/// config file.
#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// TOML config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Weight of entity grounding in the composite score.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Minimum composite score for a pass.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// Chat-completion endpoint for the remote backend.
    #[arg(long, global = true, env = EXTRACTOR_URL_ENV, value_name = "URL")]
    pub extractor_url: Option<String>,
    /// JSON synonym table for relation labels.
    #[arg(long, global = true, value_name = "FILE")]
    pub synonyms: Option<PathBuf>,
    /// Supplemental entity patterns, one `TYPE REGEX` per line.
    #[arg(long, global = true, value_name = "FILE")]
    pub patterns: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Reject unknown fields in graph JSON.
    #[arg(long, global = true)]
    pub strict_json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Builtin,
    File,
    Remote,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Builtin => Backend::Builtin,
            BackendArg::File => Backend::File,
            BackendArg::Remote => Backend::Remote,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OriginArg {
    Context,
    Query,
    Response,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Lease,
    Opinion,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the knowledge graph of a document and print it as JSON.
    Extract(ExtractArgs),
    /// Score a response against its context and query.
    Verify(VerifyArgs),
    /// Generate a synthetic corpus as JSON lines.
    Gen(GenArgs),
    /// Score a corpus and write result tables.
    Bench(BenchArgs),
    /// Run the HTTP guardrail service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Input document, or `-` for stdin.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "context")]
    pub origin: OriginArg,
    /// Triple file for the file backend.
    #[arg(long, value_name = "FILE")]
    pub triples: Option<PathBuf>,
    /// Write the graph here instead of stdout.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON verify request (same schema as the service), or `-` for stdin.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["context", "query", "response"])]
    pub request: Option<PathBuf>,
    /// Source document, or `-` for stdin.
    #[arg(long, value_name = "FILE")]
    pub context: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub query: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub response: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub context_triples: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub query_triples: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub response_triples: Option<PathBuf>,
    /// Prebuilt graph JSON replacing extraction of the context.
    #[arg(long, value_name = "FILE")]
    pub context_graph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub query_graph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub response_graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Debug, Args, Clone)]
pub struct GeneratorArgs {
    /// Number of documents per run.
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub queries_per_doc: Option<usize>,
    /// Mean context length in words.
    #[arg(long)]
    pub words: Option<u32>,
    /// Mean number of distinct entities per context.
    #[arg(long)]
    pub entities: Option<u32>,
    /// Prefix clauses with cross-references and exceptions.
    #[arg(long)]
    pub convoluted: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Output JSONL file; stdout when omitted.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Score this corpus instead of generating one.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Directory for results.json, results.csv and pairs.csv.
    #[arg(long, value_name = "DIR", default_value = "bench-out")]
    pub out_dir: PathBuf,
    /// Also sweep context-length regimes and write regimes.csv and regimes.dat.
    #[arg(long)]
    pub regime: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "ADDR")]
    pub bind: Option<SocketAddr>,
    /// Maximum number of verifications running at once.
    #[arg(long)]
    pub workers: Option<usize>,
}
