//! Question-answering dataset ingestion.
//!
//! A dataset is JSON Lines, one record per line:
//!
//! ```json
//! {"record_id":"r0001","question":"...","gold_answer":"...","support_text":"...","topic":"optional"}
//! ```
//!
//! `support_text` is the passage that becomes a knowledge snippet;
//! `gold_answer` stays on the harness side for scoring and is never placed
//! on a peer. Records with a missing or blank required field, or a duplicate
//! `record_id`, are rejected with their line number.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub record_id: String,
    pub question: String,
    pub gold_answer: String,
    pub support_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("dataset line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("dataset is empty")]
    Empty,
}

/// Reads and validates a JSONL dataset file.
pub fn ingest(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(BufReader::new(file))
}

/// Reader-based variant of [`ingest`]; blank lines are skipped.
pub fn ingest_reader(reader: impl BufRead) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut records: Vec<DatasetRecord> = Vec::new();
    let mut seen_ids: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| DatasetError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| DatasetError::Line {
                line: line_no,
                message: e.to_string(),
            })?;
        for (field, value) in [
            ("record_id", &record.record_id),
            ("question", &record.question),
            ("gold_answer", &record.gold_answer),
            ("support_text", &record.support_text),
        ] {
            if value.trim().is_empty() {
                return Err(DatasetError::Line {
                    line: line_no,
                    message: format!("field {field} is blank"),
                });
            }
        }
        if !seen_ids.insert(record.record_id.clone()) {
            return Err(DatasetError::Line {
                line: line_no,
                message: format!("duplicate record_id {}", record.record_id),
            });
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(records)
}

/// Deterministic synthetic QA corpus: `n_records` records spread round-robin
/// over `n_topics` topic labels, each question answerable from exactly one
/// support passage.
pub fn synthetic_records(n_records: usize, n_topics: usize) -> Vec<DatasetRecord> {
    assert!(n_topics >= 1, "need at least one topic label");
    (0..n_records)
        .map(|i| {
            let topic = format!("topic-{:03}", i % n_topics);
            DatasetRecord {
                record_id: format!("r{i:04}"),
                question: format!("What is the defining fact of record {i:04}?"),
                gold_answer: format!("fact {i:04}"),
                support_text: format!(
                    "The defining fact of record {i:04} is fact {i:04}. It belongs to {topic}."
                ),
                topic: Some(topic),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn line(id: &str, q: &str) -> String {
        format!(
            "{{\"record_id\":\"{id}\",\"question\":\"{q}\",\"gold_answer\":\"g\",\"support_text\":\"s\"}}"
        )
    }

    #[test]
    fn ingests_valid_lines_in_order() {
        let input = format!("{}\n\n{}\n", line("a", "qa"), line("b", "qb"));
        let records = ingest_reader(Cursor::new(input)).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].record_id, "a");
        assert_eq!(records[1].question, "qb");
        assert_eq!(records[1].topic, None);
    }

    #[test]
    fn reports_missing_field_with_line_number() {
        let input = format!("{}\n{{\"record_id\":\"b\",\"question\":\"q\"}}\n", line("a", "q"));
        let err = ingest_reader(Cursor::new(input)).unwrap_err();
        match err {
            DatasetError::Line { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("gold_answer"), "got: {message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_blank_required_field() {
        let input = "{\"record_id\":\"a\",\"question\":\" \",\"gold_answer\":\"g\",\"support_text\":\"s\"}\n";
        let err = ingest_reader(Cursor::new(input)).unwrap_err();
        assert!(matches!(err, DatasetError::Line { line: 1, .. }));
    }

    #[test]
    fn rejects_duplicate_record_id() {
        let input = format!("{}\n{}\n", line("a", "q1"), line("a", "q2"));
        let err = ingest_reader(Cursor::new(input)).unwrap_err();
        match err {
            DatasetError::Line { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_json_with_line_number() {
        let input = format!("{}\nnot json\n", line("a", "q"));
        let err = ingest_reader(Cursor::new(input)).unwrap_err();
        assert!(matches!(err, DatasetError::Line { line: 2, .. }));
    }

    #[test]
    fn synthetic_corpus_cycles_topics() {
        let records = synthetic_records(7, 3);
        assert_eq!(records.len(), 7);
        assert_eq!(records[0].topic.as_deref(), Some("topic-000"));
        assert_eq!(records[3].topic.as_deref(), Some("topic-000"));
        assert_eq!(records[5].topic.as_deref(), Some("topic-002"));
        let ids: std::collections::BTreeSet<_> =
            records.iter().map(|r| r.record_id.clone()).collect();
        assert_eq!(ids.len(), 7);
    }
}
