//! Parsers for the raw dataset formats, taxonomy annotation files and model
//! prediction files.
//!
//! All JSONL parsers share one contract: blank lines are skipped, every
//! problem is reported with its 1-based line number (and uid when one could
//! be read), and in tolerant mode a bad record is dropped with a warning
//! while `strict` mode aborts on the first problem.

mod chaos;
mod join;
mod mnli;
mod predictions;
mod taxonomy;

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::labels::AnnotationCounts;

pub use chaos::{parse_chaosnli_jsonl, to_chaosnli_json};
pub use join::{join_by_uid, HasUid, Join};
pub use mnli::{parse_mnli_jsonl, to_mnli_json};
pub use predictions::{parse_predictions, PredictionPayload, PredictionRecord};
pub use taxonomy::{
    parse_taxonomy_annotations, CategorySet, HighLevelClass, TaxonomyAnnotation, TaxonomyCategory,
};

/// Where an item's vote counts come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    /// ChaosNLI reannotation, 100 votes per item.
    #[serde(rename = "chaos")]
    Chaos100,
    /// Original MNLI dev annotation, 5 votes per item.
    #[serde(rename = "mnli")]
    Mnli5,
}

impl Source {
    pub fn expected_total(self) -> u32 {
        match self {
            Source::Chaos100 => 100,
            Source::Mnli5 => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Chaos100 => "chaos",
            Source::Mnli5 => "mnli",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One premise/hypothesis pair with its annotation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub uid: String,
    pub premise: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genre: Option<String>,
    pub counts: AnnotationCounts,
    pub source: Source,
    /// MNLI `gold_label`, kept verbatim (may be `"-"`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_gold: Option<String>,
}

impl HasUid for ItemRecord {
    fn uid(&self) -> &str {
        &self.uid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    /// Abort on the first problem instead of skipping the record.
    pub strict: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions { strict: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub uid: Option<String>,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: line {}", self.line)?;
        if let Some(uid) = &self.uid {
            write!(f, " (uid {uid})")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Records that parsed cleanly plus the diagnostics for those that did not.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub diagnostics: Vec<Diagnostic>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed {
            records: Vec::new(),
            diagnostics: Vec::new(),
        }
    }
}

impl<T> Parsed<T> {
    pub fn error_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error).count()
    }

    pub fn warning_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Warning).count()
    }
}

/// A problem with a single record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RecordError {
    pub uid: Option<String>,
    pub message: String,
}

impl RecordError {
    pub fn new(uid: Option<&str>, message: impl Into<String>) -> Self {
        RecordError {
            uid: uid.map(str::to_string),
            message: message.into(),
        }
    }
}

/// Collects records and diagnostics, enforcing uid uniqueness and the
/// strict/tolerant policy.
pub(crate) struct Collector<T> {
    options: ParseOptions,
    key: fn(&T) -> String,
    seen: HashSet<String>,
    parsed: Parsed<T>,
}

impl<T: HasUid> Collector<T> {
    pub fn new(options: ParseOptions) -> Self {
        Collector::with_key(options, |record| record.uid().to_string())
    }

    /// Uses `key` instead of the uid to detect duplicates.
    pub fn with_key(options: ParseOptions, key: fn(&T) -> String) -> Self {
        Collector {
            options,
            key,
            seen: HashSet::new(),
            parsed: Parsed::default(),
        }
    }

    pub fn push(&mut self, line: usize, outcome: Result<T, RecordError>) -> Result<()> {
        let outcome = outcome.and_then(|record| {
            let key = (self.key)(&record);
            if self.seen.contains(&key) {
                Err(RecordError::new(Some(record.uid()), format!("duplicate uid {key:?}")))
            } else {
                Ok((key, record))
            }
        });
        match outcome {
            Ok((key, record)) => {
                self.seen.insert(key);
                self.parsed.records.push(record);
                Ok(())
            }
            Err(err) if self.options.strict => Err(Error::Parse {
                line,
                uid: err.uid,
                message: err.message,
            }),
            Err(err) => {
                self.parsed.diagnostics.push(Diagnostic {
                    line,
                    uid: err.uid,
                    severity: Severity::Warning,
                    message: format!("{}; record skipped", err.message),
                });
                Ok(())
            }
        }
    }

    pub fn finish(self) -> Parsed<T> {
        self.parsed
    }
}

/// Drives a per-record JSON parser over a JSONL stream.
pub(crate) fn parse_jsonl<R, T, F>(reader: R, options: ParseOptions, mut parse: F) -> Result<Parsed<T>>
where
    R: BufRead,
    T: HasUid,
    F: FnMut(&Value) -> Result<T, RecordError>,
{
    let mut collector = Collector::new(options);
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let outcome = match serde_json::from_str::<Value>(trimmed) {
            Ok(value @ Value::Object(_)) => parse(&value),
            Ok(_) => Err(RecordError::new(None, "record is not a JSON object")),
            Err(err) => Err(RecordError::new(None, format!("malformed JSON: {err}"))),
        };
        collector.push(line_no, outcome)?;
    }
    Ok(collector.finish())
}

/// Reads a required string field, following `.`-separated paths.
pub(crate) fn str_field<'a>(value: &'a Value, path: &str, uid: Option<&str>) -> Result<&'a str, RecordError> {
    let mut current = value;
    for key in path.split('.') {
        current = current
            .get(key)
            .ok_or_else(|| RecordError::new(uid, format!("missing field {path}")))?;
    }
    current
        .as_str()
        .ok_or_else(|| RecordError::new(uid, format!("field {path} is not a string")))
}

pub(crate) fn opt_str_field(value: &Value, path: &str) -> Option<String> {
    let mut current = value;
    for key in path.split('.') {
        current = current.get(key)?;
    }
    current.as_str().map(str::to_string)
}

pub(crate) fn check_total(counts: &AnnotationCounts, source: Source, uid: &str) -> Result<(), RecordError> {
    let total = counts.total();
    let expected = source.expected_total();
    if total != expected {
        return Err(RecordError::new(
            Some(uid),
            format!("counts sum {total} ≠ {expected}"),
        ));
    }
    Ok(())
}
