use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::RawTriple;
use crate::error::ExtractError;

/// A JSONL line that could not be turned into a triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub triples: Vec<RawTriple>,
    pub errors: Vec<LineError>,
}

/// Reads one triple per line. Blank lines are skipped; bad lines are
/// collected in `errors` and do not stop the read.
pub fn ingest_triples<R: Read>(reader: R) -> std::io::Result<IngestReport> {
    let mut report = IngestReport::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        ingest_line(idx + 1, &line, &mut report);
    }
    Ok(report)
}

pub fn ingest_triples_str(text: &str) -> IngestReport {
    let mut report = IngestReport::default();
    for (idx, line) in text.lines().enumerate() {
        ingest_line(idx + 1, line, &mut report);
    }
    report
}

pub(crate) fn ingest_path(path: &Path) -> Result<IngestReport, ExtractError> {
    let io = |source| ExtractError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    ingest_triples(file).map_err(io)
}

fn ingest_line(line_no: usize, line: &str, report: &mut IngestReport) {
    if line.trim().is_empty() {
        return;
    }
    match serde_json::from_str::<RawTriple>(line) {
        Ok(t) if t.is_valid() => report.triples.push(t),
        Ok(_) => report.errors.push(LineError { line: line_no, message: "empty subject, relation or object".into() }),
        Err(e) => report.errors.push(LineError { line: line_no, message: e.to_string() }),
    }
}

pub fn write_triples_jsonl<W: Write>(mut w: W, triples: &[RawTriple]) -> std::io::Result<()> {
    for t in triples {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
