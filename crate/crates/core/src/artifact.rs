//! Line-delimited JSON records exchanged between pipeline stages.

use std::fmt;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::align::CharRange;
use crate::annotation::SentenceAnnotation;
use crate::eval::ResponseMetrics;
use crate::judge::{ResponseAnnotation, StatementProvenance};
use crate::reward::{RewardEvent, RewardKind};

/// Significant digits kept for every reward scalar written to disk.
pub const REWARD_SIG_DIGITS: usize = 9;

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(value: f64, digits: usize) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    format!("{:.*e}", digits.saturating_sub(1), value)
        .parse()
        .expect("formatted float parses")
}

/// Record identifier, kept as written: a JSON string or integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordId {
    Int(i64),
    Str(String),
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordId::Int(i) => write!(f, "{i}"),
            RecordId::Str(s) => f.write_str(s),
        }
    }
}

impl From<&str> for RecordId {
    fn from(s: &str) -> Self {
        RecordId::Str(s.to_string())
    }
}

impl From<i64> for RecordId {
    fn from(i: i64) -> Self {
        RecordId::Int(i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub id: RecordId,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: RecordId,
    pub prompt: String,
    pub response: String,
    pub sentences: Vec<SentenceAnnotation>,
    pub provenance: Vec<StatementProvenance>,
    /// Set when annotation failed; the record then carries no sentences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AnnotationRecord {
    pub fn from_annotation(id: RecordId, annotation: ResponseAnnotation) -> Self {
        AnnotationRecord {
            id,
            prompt: annotation.prompt,
            response: annotation.response,
            sentences: annotation.sentences,
            provenance: annotation.provenance,
            error: None,
        }
    }

    pub fn failed(input: &InputRecord, error: impl fmt::Display) -> Self {
        AnnotationRecord {
            id: input.id.clone(),
            prompt: input.prompt.clone(),
            response: input.response.clone(),
            sentences: Vec::new(),
            provenance: Vec::new(),
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub offset: usize,
    pub value: f64,
    pub kind: RewardKind,
}

impl From<&RewardEvent> for EventRecord {
    fn from(e: &RewardEvent) -> Self {
        EventRecord {
            offset: e.offset,
            value: round_sig(e.value, REWARD_SIG_DIGITS),
            kind: e.kind,
        }
    }
}

impl From<&EventRecord> for RewardEvent {
    fn from(e: &EventRecord) -> Self {
        RewardEvent {
            offset: e.offset,
            value: e.value,
            kind: e.kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub id: RecordId,
    pub response: String,
    pub events: Vec<EventRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_rewards: Option<Vec<f64>>,
    pub config_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenOffsetsRecord {
    pub id: RecordId,
    pub offsets: Vec<CharRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub id: RecordId,
    #[serde(flatten)]
    pub metrics: ResponseMetrics,
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, records: &[T]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
