//! Per-peer knowledge: snippet stores, relevance scoring, privacy
//! filtering, and query result caching.
//!
//! A snippet is the retrieval unit. Local retrieval (`query_local`) returns
//! the best-scoring snippet for a query under one of three scorers:
//!
//! * `oracle`: 1.0 exactly when the snippet's source record is the record
//!   the question came from, else 0.0; used for controlled experiments
//!   where retrieval quality must not confound routing behavior,
//! * `lexical`: tf-idf cosine between query and snippet text, with corpus
//!   statistics taken from the store being queried,
//! * `embedding`: cosine between backend embeddings, mapped from [-1, 1]
//!   to [0, 1].
//!
//! Snippets marked private never leave their peer: the privacy filter drops
//! them and applies regex redaction rules to everything else on the way
//! out. Each peer also keeps a result cache keyed by normalized query text
//! so repeated questions are answered without any network traffic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::{LmBackend, LmError};
use crate::text;
use crate::topology::PeerId;

/// Atomic retrieval unit held by a peer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeSnippet {
    pub snippet_id: String,
    pub text: String,
    pub topics: BTreeSet<String>,
    pub source_record: String,
    pub private: bool,
}

/// A question entering the network at some origin peer. Gold answers live
/// on the harness side only and never travel with the query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
    pub origin: PeerId,
}

/// Relevance in [0, 1]; out-of-range inputs are clamped.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelevanceScore(f64);

impl RelevanceScore {
    pub fn new(value: f64) -> Self {
        RelevanceScore(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate snippet_id {0}")]
    DuplicateSnippet(String),
    #[error("cannot access snippet store {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("snippet store line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Maps normalized question text to the record that answers it; backs the
/// oracle scorer.
#[derive(Debug, Clone, Default)]
pub struct OracleIndex {
    record_by_question: HashMap<String, String>,
}

impl OracleIndex {
    pub fn from_records(records: &[crate::dataset::DatasetRecord]) -> Self {
        let record_by_question = records
            .iter()
            .map(|r| (text::normalize_query_key(&r.question), r.record_id.clone()))
            .collect();
        OracleIndex { record_by_question }
    }

    fn record_for(&self, query_text: &str) -> Option<&str> {
        self.record_by_question
            .get(&text::normalize_query_key(query_text))
            .map(String::as_str)
    }
}

/// Relevance scoring backend.
#[derive(Debug, Clone)]
pub enum Scorer {
    Oracle(OracleIndex),
    Lexical,
    Embedding,
}

enum PreparedQuery<'a> {
    Oracle(Option<&'a str>),
    Lexical(BTreeMap<String, f64>),
    Embedding(Vec<f64>),
}

impl Scorer {
    /// Precomputes the query-side representation so scoring a store of
    /// snippets embeds or tokenizes the query once.
    fn prepare<'a>(
        &'a self,
        query_text: &str,
        store: &SnippetStore,
        lm: &LmBackend,
    ) -> Result<PreparedQuery<'a>, LmError> {
        match self {
            Scorer::Oracle(index) => Ok(PreparedQuery::Oracle(index.record_for(query_text))),
            Scorer::Lexical => Ok(PreparedQuery::Lexical(store.idf_stats().weights(query_text))),
            Scorer::Embedding => Ok(PreparedQuery::Embedding(lm.embed(query_text)?)),
        }
    }
}

fn score_prepared(
    prepared: &PreparedQuery<'_>,
    snippet: &KnowledgeSnippet,
    store: &SnippetStore,
    lm: &LmBackend,
) -> Result<RelevanceScore, LmError> {
    let raw = match prepared {
        PreparedQuery::Oracle(target) => {
            if target.is_some_and(|record| record == snippet.source_record) {
                1.0
            } else {
                0.0
            }
        }
        PreparedQuery::Lexical(query_weights) => {
            let snippet_weights = store.idf_stats().weights(&snippet.text);
            text::cosine(query_weights, &snippet_weights)
        }
        PreparedQuery::Embedding(query_vec) => {
            let snippet_vec = lm.embed(&snippet.text)?;
            (cosine_dense(query_vec, &snippet_vec) + 1.0) / 2.0
        }
    };
    Ok(RelevanceScore::new(raw))
}

/// Scores one snippet against a query. Corpus statistics for the lexical
/// scorer come from `store`.
pub fn relevance(
    query_text: &str,
    snippet: &KnowledgeSnippet,
    scorer: &Scorer,
    store: &SnippetStore,
    lm: &LmBackend,
) -> Result<RelevanceScore, LmError> {
    let prepared = scorer.prepare(query_text, store, lm)?;
    score_prepared(&prepared, snippet, store, lm)
}

fn cosine_dense(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// One peer's snippet collection, keyed by snippet id.
#[derive(Debug, Default)]
pub struct SnippetStore {
    snippets: BTreeMap<String, KnowledgeSnippet>,
    idf: OnceLock<text::IdfStats>,
}

impl Clone for SnippetStore {
    fn clone(&self) -> Self {
        SnippetStore { snippets: self.snippets.clone(), idf: OnceLock::new() }
    }
}

impl SnippetStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, snippet: KnowledgeSnippet) -> Result<(), StoreError> {
        if self.snippets.contains_key(&snippet.snippet_id) {
            return Err(StoreError::DuplicateSnippet(snippet.snippet_id));
        }
        self.snippets.insert(snippet.snippet_id.clone(), snippet);
        self.idf = OnceLock::new();
        Ok(())
    }

    pub fn get(&self, snippet_id: &str) -> Option<&KnowledgeSnippet> {
        self.snippets.get(snippet_id)
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    /// Snippets ascending by id.
    pub fn iter(&self) -> impl Iterator<Item = &KnowledgeSnippet> {
        self.snippets.values()
    }

    fn idf_stats(&self) -> &text::IdfStats {
        self.idf.get_or_init(|| {
            text::IdfStats::from_docs(self.snippets.values().map(|s| s.text.as_str()))
        })
    }

    /// Best-scoring snippet for a query, ties resolved by lowest snippet id.
    /// None only when the store is empty.
    pub fn query_local(
        &self,
        query_text: &str,
        scorer: &Scorer,
        lm: &LmBackend,
    ) -> Result<Option<(&KnowledgeSnippet, RelevanceScore)>, LmError> {
        Ok(self.query_ranked(query_text, scorer, lm, 1)?.into_iter().next())
    }

    /// The `j` best-scoring snippets, score descending with ties resolved
    /// by lowest snippet id.
    pub fn query_ranked(
        &self,
        query_text: &str,
        scorer: &Scorer,
        lm: &LmBackend,
        j: usize,
    ) -> Result<Vec<(&KnowledgeSnippet, RelevanceScore)>, LmError> {
        if self.snippets.is_empty() || j == 0 {
            return Ok(Vec::new());
        }
        let prepared = scorer.prepare(query_text, self, lm)?;
        let mut scored: Vec<(&KnowledgeSnippet, RelevanceScore)> = Vec::new();
        for snippet in self.snippets.values() {
            scored.push((snippet, score_prepared(&prepared, snippet, self, lm)?));
        }
        scored.sort_by(|a, b| b.1.value().total_cmp(&a.1.value()));
        scored.truncate(j);
        Ok(scored)
    }

    /// Writes the store as JSON Lines, one snippet per line, ascending id.
    pub fn write_jsonl(&self, path: &Path) -> Result<(), StoreError> {
        let file = File::create(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut out = BufWriter::new(file);
        for snippet in self.snippets.values() {
            let line = serde_json::to_string(snippet)
                .expect("snippet serialization cannot fail");
            writeln!(out, "{line}").map_err(|source| StoreError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, StoreError> {
        let file = File::open(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut store = SnippetStore::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| StoreError::Line {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let snippet: KnowledgeSnippet =
                serde_json::from_str(&line).map_err(|e| StoreError::Line {
                    line: line_no,
                    message: e.to_string(),
                })?;
            store.insert(snippet).map_err(|e| StoreError::Line {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        Ok(store)
    }
}

/// Regex rewrite applied to snippet text leaving a peer.
#[derive(Debug, Clone)]
pub struct RedactionRule {
    pattern: Regex,
    replacement: String,
}

impl RedactionRule {
    pub fn new(pattern: &str, replacement: &str) -> Result<Self, regex::Error> {
        Ok(RedactionRule {
            pattern: Regex::new(pattern)?,
            replacement: replacement.to_string(),
        })
    }
}

/// Outbound filter: drops private snippets, then applies redaction rules in
/// order to the text of the rest.
#[derive(Debug, Clone, Default)]
pub struct PrivacyPolicy {
    rules: Vec<RedactionRule>,
}

impl PrivacyPolicy {
    pub fn with_rules(rules: Vec<RedactionRule>) -> Self {
        PrivacyPolicy { rules }
    }

    fn redact(&self, input: &str) -> String {
        let mut out = input.to_string();
        for rule in &self.rules {
            out = rule.pattern.replace_all(&out, rule.replacement.as_str()).into_owned();
        }
        out
    }
}

/// Applies a privacy policy to snippets about to leave a peer, preserving
/// order.
pub fn privacy_filter(
    snippets: &[KnowledgeSnippet],
    policy: &PrivacyPolicy,
) -> Vec<KnowledgeSnippet> {
    snippets
        .iter()
        .filter(|s| !s.private)
        .map(|s| {
            let mut out = s.clone();
            out.text = policy.redact(&out.text);
            out
        })
        .collect()
}

/// A cached successful retrieval for one normalized query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedResult {
    pub answer: String,
    pub snippets: Vec<KnowledgeSnippet>,
    pub contributing_peer: PeerId,
}

/// Per-peer query result cache keyed by normalized query text (lowercased,
/// whitespace collapsed). Repeats of a cached query cost zero messages.
#[derive(Debug, Clone, Default)]
pub struct ResultCache {
    entries: HashMap<String, CachedResult>,
}

impl ResultCache {
    pub fn lookup(&self, query_text: &str) -> Option<&CachedResult> {
        self.entries.get(&text::normalize_query_key(query_text))
    }

    /// Last write wins for the same normalized query.
    pub fn store(&mut self, query_text: &str, result: CachedResult) {
        self.entries.insert(text::normalize_query_key(query_text), result);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
