//! Command-line front end: `extract`, `verify`, `gen`, `bench` and `serve`.
//!
//! Exit codes of `verify`: 0 pass, 1 fail, 2 sparse. Errors exit above 2:
//! 3 usage, 4 invalid input or I/O, 5 extraction failure, 6 benchmark
//! failure.

pub mod args;
pub mod config;
pub mod serve;

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use hallugraph_core::audit::{render_report, ReportFormat, Verdict};
use hallugraph_core::bench::{
    evaluate, generate_corpus, read_corpus_jsonl, regime_sweep, run_bench, write_corpus_jsonl, BenchOptions, DocKind,
    GeneratorConfig, IntDist, Scorer, DEFAULT_REGIMES,
};
use hallugraph_core::extract::{build_graph_with, Backend, RemoteExtractor, TripleSource};
use hallugraph_core::pipeline::{GraphOverrides, TripleFiles, Verifier, VerifyRequest};
use hallugraph_core::{BenchError, ExtractError, KnowledgeGraph, Origin, VerifyError};

use crate::args::{BenchArgs, Cli, Command, ExtractArgs, FormatArg, GenArgs, GeneratorArgs, KindArg, OriginArg, ServeArgs, VerifyArgs};
use crate::config::{resolve, Resolved};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_SPARSE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_INPUT: i32 = 4;
pub const EXIT_EXTRACTION: i32 = 5;
pub const EXIT_BENCH: i32 = 6;

pub fn verdict_exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Sparse => EXIT_SPARSE,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            error_exit_code(&e)
        }
    }
}

fn error_exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(v) = cause.downcast_ref::<VerifyError>() {
            return match v {
                VerifyError::Invalid(_) => EXIT_INPUT,
                VerifyError::Extract(_) => EXIT_EXTRACTION,
            };
        }
        if let Some(x) = cause.downcast_ref::<ExtractError>() {
            return match x {
                ExtractError::Io { .. } | ExtractError::Pattern { .. } | ExtractError::Synonyms(_) => EXIT_INPUT,
                _ => EXIT_EXTRACTION,
            };
        }
        if let Some(b) = cause.downcast_ref::<BenchError>() {
            return match b {
                BenchError::Io(_) | BenchError::Config(_) => EXIT_INPUT,
                _ => EXIT_BENCH,
            };
        }
    }
    EXIT_INPUT
}

fn dispatch(cli: Cli) -> Result<i32> {
    let resolved = resolve(&cli.common)?;
    match cli.command {
        Command::Extract(a) => extract(a, &resolved),
        Command::Verify(a) => verify(a, resolved),
        Command::Gen(a) => gen(a, &resolved),
        Command::Bench(a) => bench(a, &resolved),
        Command::Serve(a) => serve(a, resolved),
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn extract(a: ExtractArgs, r: &Resolved) -> Result<i32> {
    let doc = read_input(&a.input)?;
    let origin = match a.origin {
        OriginArg::Context => Origin::Context,
        OriginArg::Query => Origin::Query,
        OriginArg::Response => Origin::Response,
    };
    let remote;
    let source = match r.settings.extractor.backend {
        Backend::Builtin => TripleSource::Builtin,
        Backend::File => TripleSource::File(a.triples.as_deref().ok_or_else(|| anyhow!("--triples is required with the file backend"))?),
        Backend::Remote => {
            remote = RemoteExtractor::from_config(&r.settings.extractor)?;
            TripleSource::Remote(&remote)
        }
    };
    let g = build_graph_with(&doc, origin, source, &r.settings.recognizer)?;
    write_output(a.output.as_deref(), &(g.to_json_string() + "\n"))?;
    Ok(EXIT_PASS)
}

fn read_graph(path: &Path, origin: Origin, strict: bool) -> Result<KnowledgeGraph> {
    let text = read_input(path)?;
    let g = KnowledgeGraph::from_json_str(&text, strict).with_context(|| format!("parsing graph {}", path.display()))?;
    if g.origin() != origin {
        bail!("graph {} has origin {}, expected {}", path.display(), g.origin().as_str(), origin.as_str());
    }
    Ok(g)
}

/// Builds the request the service would receive for the same inputs.
pub fn request_from_args(a: &VerifyArgs) -> Result<VerifyRequest> {
    let mut req = match &a.request {
        Some(p) => serde_json::from_str::<VerifyRequest>(&read_input(p)?)
            .map_err(|e| VerifyError::Invalid(format!("malformed request {}: {e}", p.display())))?,
        None => {
            let text = |p: &Option<std::path::PathBuf>| p.as_deref().map(read_input).transpose();
            VerifyRequest {
                context: text(&a.context)?.unwrap_or_default(),
                query: text(&a.query)?.unwrap_or_default(),
                response: text(&a.response)?.unwrap_or_default(),
                options: Default::default(),
            }
        }
    };
    if a.context_triples.is_some() || a.query_triples.is_some() || a.response_triples.is_some() {
        let files = req.options.triples.get_or_insert_with(TripleFiles::default);
        files.context = a.context_triples.clone().or(files.context.take());
        files.query = a.query_triples.clone().or(files.query.take());
        files.response = a.response_triples.clone().or(files.response.take());
    }
    Ok(req)
}

fn verify(a: VerifyArgs, r: Resolved) -> Result<i32> {
    if a.request.is_none() && (a.context.is_none() && a.context_graph.is_none() || a.response.is_none() && a.response_graph.is_none()) {
        return Err(VerifyError::Invalid("verify needs --request, or --context and --response".into()).into());
    }
    let req = request_from_args(&a)?;
    let graphs = GraphOverrides {
        context: a.context_graph.as_deref().map(|p| read_graph(p, Origin::Context, r.strict_json)).transpose()?,
        query: a.query_graph.as_deref().map(|p| read_graph(p, Origin::Query, r.strict_json)).transpose()?,
        response: a.response_graph.as_deref().map(|p| read_graph(p, Origin::Response, r.strict_json)).transpose()?,
    };
    let verifier = Verifier::new(r.settings)?;
    let v = verifier.verify_with(&req, graphs)?;
    let format = match a.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Text => ReportFormat::Text,
    };
    let mut report = render_report(&v.decision, format);
    if !report.ends_with('\n') {
        report.push('\n');
    }
    write_output(None, &report)?;
    Ok(verdict_exit_code(v.decision.verdict))
}

fn generator_config(g: &GeneratorArgs, seed: Option<u64>) -> GeneratorConfig {
    let mut cfg = GeneratorConfig::default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    match g.kind {
        Some(KindArg::Lease) | None => {}
        Some(KindArg::Opinion) => cfg.doc_kinds = vec![DocKind::Opinion],
        Some(KindArg::Both) => {
            cfg.doc_kinds = vec![DocKind::Lease, DocKind::Opinion];
            cfg.n_documents *= 2;
        }
    }
    if let Some(n) = g.docs {
        cfg.n_documents = n;
    }
    if let Some(q) = g.queries_per_doc {
        cfg.queries_per_doc = q;
    }
    if let Some(w) = g.words {
        cfg.target_words = IntDist { mean: w, ..cfg.target_words };
    }
    if let Some(e) = g.entities {
        cfg.target_entities = IntDist { mean: e, ..cfg.target_entities };
    }
    cfg.convoluted = g.convoluted;
    cfg
}

fn gen(a: GenArgs, r: &Resolved) -> Result<i32> {
    let cfg = generator_config(&a.generator, r.seed);
    let corpus = generate_corpus(&cfg)?;
    let mut buf = Vec::new();
    write_corpus_jsonl(&mut buf, &corpus)?;
    write_output(a.output.as_deref(), std::str::from_utf8(&buf)?)?;
    if a.output.is_some() {
        eprintln!("wrote {} instances", corpus.len());
    }
    Ok(EXIT_PASS)
}

fn bench(a: BenchArgs, r: &Resolved) -> Result<i32> {
    if r.settings.extractor.backend != Backend::Builtin {
        return Err(VerifyError::Invalid("bench runs the builtin extractor only".into()).into());
    }
    let cfg = generator_config(&a.generator, r.seed);
    let corpus = match &a.corpus {
        Some(p) => {
            let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            read_corpus_jsonl(std::io::BufReader::new(f))?
        }
        None => generate_corpus(&cfg)?,
    };
    let opts = BenchOptions { alpha: r.settings.alpha, synonyms: r.settings.synonyms.clone(), ..Default::default() };
    let (result, pairs) = run_bench(&corpus, &opts)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let out = |name: &str, content: String| -> Result<()> {
        let p = a.out_dir.join(name);
        fs::write(&p, content).with_context(|| format!("writing {}", p.display()))
    };
    out("results.json", result.to_json() + "\n")?;
    out("results.csv", result.to_csv())?;
    out("pairs.csv", evaluate::pairs_to_csv(&pairs))?;

    println!("{:<20} {:>6} {:>7} {:>7} {:>7} {:>7} {:>6}", "dataset", "pairs", "CFI", "EG", "RP", "NE", "alpha*");
    for d in &result.datasets {
        println!(
            "{:<20} {:>6} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>6}",
            d.dataset,
            d.pairs,
            d.scorer(Scorer::Cfi).auc.auc,
            d.scorer(Scorer::Eg).auc.auc,
            d.scorer(Scorer::Rp).auc.auc,
            d.scorer(Scorer::NeOverlap).auc.auc,
            d.tuned_alpha.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
        );
    }
    if a.regime {
        let rows = regime_sweep(&cfg, &DEFAULT_REGIMES, &opts)?;
        out("regimes.csv", evaluate::regimes_to_csv(&rows))?;
        out("regimes.dat", evaluate::regimes_to_dat(&rows))?;
        println!("{:>8} {:>9} {:>7} {:>7}", "words", "entities", "CFI", "sparse");
        for row in &rows {
            println!("{:>8.1} {:>9.1} {:>7.4} {:>7.3}", row.mean_words, row.mean_entities, row.auc_cfi, row.sparse_fraction);
        }
    }
    Ok(EXIT_PASS)
}

fn serve(a: ServeArgs, r: Resolved) -> Result<i32> {
    let workers = a.workers.unwrap_or(r.workers);
    if workers == 0 {
        return Err(VerifyError::Invalid("--workers must be at least 1".into()).into());
    }
    let verifier = Verifier::new(r.settings)?;
    serve::serve_blocking(a.bind.unwrap_or(r.bind), serve::AppState::new(verifier, workers))?;
    Ok(EXIT_PASS)
}
