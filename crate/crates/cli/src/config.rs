//! TOML configuration layered under command-line flags.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use hallugraph_core::extract::{Backend, ExtractorConfig};
use hallugraph_core::metrics::SynonymTable;
use hallugraph_core::ner::Recognizer;
use hallugraph_core::pipeline::VerifierSettings;
use serde::Deserialize;

use crate::args::CommonArgs;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_WORKERS: usize = 8;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub threshold: Option<f64>,
    pub backend: Option<Backend>,
    pub synonyms: Option<PathBuf>,
    pub patterns: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict_json: Option<bool>,
    #[serde(default)]
    pub extractor: ExtractorSection,
    #[serde(default)]
    pub serve: ServeSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractorSection {
    pub url: Option<String>,
    pub model: Option<String>,
    pub timeout_ms: Option<u64>,
    pub max_retries: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub prompt_template: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub bind: Option<SocketAddr>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags merged over the config file. Relative paths in the config file
/// resolve against its directory.
#[derive(Debug)]
pub struct Resolved {
    pub settings: VerifierSettings,
    pub seed: Option<u64>,
    pub strict_json: bool,
    pub bind: SocketAddr,
    pub workers: usize,
}

pub fn resolve(common: &CommonArgs) -> Result<Resolved> {
    let (file, base) = match &common.config {
        Some(path) => (FileConfig::load(path)?, path.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (FileConfig::default(), PathBuf::new()),
    };
    let from_file = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));

    let mut extractor = ExtractorConfig::default();
    let ex = &file.extractor;
    extractor.backend = common.backend.map(Backend::from).or(file.backend).unwrap_or_default();
    extractor.remote_url = common.extractor_url.clone().or_else(|| ex.url.clone());
    extractor.remote_model = ex.model.clone();
    if let Some(ms) = ex.timeout_ms {
        extractor.timeout = Duration::from_millis(ms);
    }
    if let Some(n) = ex.max_retries {
        extractor.max_retries = n;
    }
    if let Some(ms) = ex.retry_backoff_ms {
        extractor.retry_backoff = Duration::from_millis(ms);
    }
    if let Some(n) = ex.max_in_flight {
        extractor.max_in_flight = n;
    }
    if let Some(t) = &ex.prompt_template {
        extractor.prompt_template = t.clone();
    }

    let synonyms = match common.synonyms.clone().or_else(|| from_file(&file.synonyms)) {
        Some(p) => SynonymTable::from_file(&p)?,
        None => SynonymTable::new(),
    };
    let recognizer = match common.patterns.clone().or_else(|| from_file(&file.patterns)) {
        Some(p) => Recognizer::with_pattern_file(&p)?,
        None => Recognizer::default(),
    };
    let defaults = VerifierSettings::default();
    let settings = VerifierSettings {
        alpha: common.alpha.or(file.alpha).unwrap_or(defaults.alpha),
        threshold: common.threshold.or(file.threshold).unwrap_or(defaults.threshold),
        synonyms,
        recognizer,
        extractor,
    };
    let workers = file.serve.workers.unwrap_or(DEFAULT_WORKERS);
    if workers == 0 {
        bail!("serve.workers must be at least 1");
    }
    Ok(Resolved {
        settings,
        seed: common.seed.or(file.seed),
        strict_json: common.strict_json || file.strict_json.unwrap_or(false),
        bind: file.serve.bind.unwrap_or_else(|| DEFAULT_BIND.parse().expect("valid default address")),
        workers,
    })
}
