use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::text::{normalize, tokenize};

use super::{AnnotatedSentence, Annotator};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DropReason {
    Empty,
    Decode { detail: String },
    Length { tokens: usize, max: usize },
    Annotate { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedLine {
    pub line: usize,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub sentences: Vec<AnnotatedSentence>,
    pub dropped: Vec<DroppedLine>,
}

fn ingest_line(
    raw: &[u8],
    name: &str,
    line: usize,
    max_tokens: usize,
    annotator: &mut dyn Annotator,
) -> Result<AnnotatedSentence, DropReason> {
    let text = match std::str::from_utf8(raw) {
        Ok(t) => normalize(t),
        Err(e) => {
            warn!("{name}:{line}: not UTF-8 ({e})");
            return Err(DropReason::Decode { detail: e.to_string() });
        }
    };
    if text.is_empty() {
        return Err(DropReason::Empty);
    }
    let tokens = tokenize(&text).len();
    if tokens > max_tokens {
        info!("{name}:{line}: dropped, {tokens} tokens > {max_tokens}");
        return Err(DropReason::Length { tokens, max: max_tokens });
    }
    annotator.annotate(&text, &format!("{name}:{line}")).map_err(|e| {
        warn!("{name}:{line}: {e}");
        DropReason::Annotate { detail: e.to_string() }
    })
}

/// Reads one sentence per line. Each kept sentence is tagged `name:line`
/// (1-based). Blank lines, undecodable lines and lines over `max_tokens`
/// are dropped with a reason.
pub fn ingest_corpus(
    bytes: &[u8],
    name: &str,
    max_tokens: usize,
    annotator: &mut dyn Annotator,
) -> IngestReport {
    let mut report = IngestReport::default();
    if bytes.is_empty() {
        return report;
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    for (i, raw) in body.split(|&b| b == b'\n').enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        match ingest_line(raw, name, line, max_tokens, annotator) {
            Ok(s) => report.sentences.push(s),
            Err(reason) => report.dropped.push(DroppedLine { line, reason }),
        }
    }
    report
}
