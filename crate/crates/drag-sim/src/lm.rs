//! Pluggable language-model backends.
//!
//! The simulator needs three model operations: topic extraction for a query,
//! answer generation from a context of snippets, and text embedding. Two
//! backends implement them:
//!
//! * [`MockLm`] is built from the dataset and behaves like an oracle with no
//!   generalization: it knows the topics of every question and passage, and
//!   it produces the gold answer exactly when the supporting snippet is in
//!   its context, [`NO_ANSWER`] otherwise. It performs no network activity
//!   and makes full-pipeline runs deterministic and fast.
//! * [`HttpLm`] talks to an Ollama-compatible server (`POST /api/generate`,
//!   `POST /api/embeddings`) with a bounded retry loop.
//!
//! Topic extraction never fails: when the HTTP backend yields nothing
//! usable, the query's most frequent content tokens stand in as topics and
//! the caller is told a fallback happened so traces can flag it.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::DatasetRecord;
use crate::knowledge::KnowledgeSnippet;
use crate::text;

/// Answer emitted when the model cannot ground a response in its context.
pub const NO_ANSWER: &str = "UNKNOWN";

/// Number of fallback topic labels taken from query text.
pub const FALLBACK_TOPIC_COUNT: usize = 3;

/// Dimension of mock pseudo-embeddings.
pub const EMBED_DIM: usize = 64;

pub const DEFAULT_TOPIC_PROMPT: &str = "Extract at most {max_topics} short topic labels for the \
question below. Reply with a comma-separated list only.\n\nQuestion: {query}\nTopics:";

pub const DEFAULT_ANSWER_PROMPT: &str = "Answer the question using only the context. If the \
context does not contain the answer, reply UNKNOWN.\n\nContext:\n{context}\n\nQuestion: \
{query}\nAnswer:";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("lm transport failure at {url}: {message}")]
    Transport { url: String, message: String },
    #[error("malformed lm response: {0}")]
    BadResponse(String),
    #[error("invalid lm configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmKind {
    Mock,
    Http,
}

impl fmt::Display for LmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LmKind::Mock => write!(f, "mock"),
            LmKind::Http => write!(f, "http"),
        }
    }
}

impl FromStr for LmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(LmKind::Mock),
            "http" => Ok(LmKind::Http),
            other => Err(format!("unknown lm backend {other:?}, expected mock or http")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmBackendConfig {
    pub kind: LmKind,
    pub base_url: String,
    pub model_name: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_topics: usize,
    /// Seed for mock pseudo-embeddings.
    pub mock_seed: u64,
    pub topic_prompt: String,
    pub answer_prompt: String,
}

impl Default for LmBackendConfig {
    fn default() -> Self {
        LmBackendConfig {
            kind: LmKind::Mock,
            base_url: "http://127.0.0.1:11434".to_string(),
            model_name: "llama3.2:3b".to_string(),
            timeout_secs: 30,
            max_retries: 2,
            max_topics: 5,
            mock_seed: 0,
            topic_prompt: DEFAULT_TOPIC_PROMPT.to_string(),
            answer_prompt: DEFAULT_ANSWER_PROMPT.to_string(),
        }
    }
}

impl LmBackendConfig {
    /// Short label for reports: "mock" or "http:<model>".
    pub fn describe(&self) -> String {
        match self.kind {
            LmKind::Mock => "mock".to_string(),
            LmKind::Http => format!("http:{}", self.model_name),
        }
    }
}

/// Normalized set of topic labels, bounded in size.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicSet(BTreeSet<String>);

impl TopicSet {
    /// Normalizes labels (trim, lowercase, trailing periods removed, blanks
    /// dropped, duplicates collapsed) and keeps the first `max` distinct
    /// ones in input order.
    pub fn from_labels<I, S>(labels: I, max: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for label in labels {
            if set.len() >= max {
                break;
            }
            let norm = label.as_ref().trim().trim_end_matches('.').trim().to_lowercase();
            if !norm.is_empty() {
                set.insert(norm);
            }
        }
        TopicSet(set)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.0.iter()
    }

    /// Size of the overlap with another label set.
    pub fn overlap(&self, other: &TopicSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    /// Set union in place; expertise entries grow without bound.
    pub fn union_with(&mut self, other: &TopicSet) {
        self.0.extend(other.0.iter().cloned());
    }
}

impl FromIterator<String> for TopicSet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        TopicSet::from_labels(iter, usize::MAX)
    }
}

/// Topic extraction result; `used_fallback` marks labels that came from
/// query tokens rather than the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicExtraction {
    pub topics: TopicSet,
    pub used_fallback: bool,
}

fn fallback_topics(query_text: &str) -> TopicSet {
    TopicSet::from_labels(
        text::top_content_tokens(query_text, FALLBACK_TOPIC_COUNT),
        FALLBACK_TOPIC_COUNT,
    )
}

/// Dataset-derived model stand-in. Topic lookup is keyed by normalized
/// question text and by normalized support text, so both query-time
/// extraction and placement-time extraction resolve without fallback.
#[derive(Debug, Clone)]
pub struct MockLm {
    seed: u64,
    topics_by_key: HashMap<String, TopicSet>,
    answers_by_key: HashMap<String, (String, String)>,
}

impl MockLm {
    pub fn new(records: &[DatasetRecord], seed: u64) -> Self {
        let mut topics_by_key = HashMap::new();
        let mut answers_by_key = HashMap::new();
        for record in records {
            let topics = match &record.topic {
                Some(t) => TopicSet::from_labels([t.as_str()], FALLBACK_TOPIC_COUNT),
                None => fallback_topics(&record.support_text),
            };
            let q_key = text::normalize_query_key(&record.question);
            let s_key = text::normalize_query_key(&record.support_text);
            topics_by_key.insert(q_key.clone(), topics.clone());
            topics_by_key.insert(s_key, topics);
            answers_by_key
                .insert(q_key, (record.record_id.clone(), record.gold_answer.clone()));
        }
        MockLm { seed, topics_by_key, answers_by_key }
    }

    fn extract_topics(&self, query_text: &str) -> TopicExtraction {
        match self.topics_by_key.get(&text::normalize_query_key(query_text)) {
            Some(topics) => TopicExtraction { topics: topics.clone(), used_fallback: false },
            None => TopicExtraction { topics: fallback_topics(query_text), used_fallback: true },
        }
    }

    fn generate_answer(&self, query_text: &str, context: &[KnowledgeSnippet]) -> String {
        let key = text::normalize_query_key(query_text);
        if let Some((record_id, gold)) = self.answers_by_key.get(&key) {
            if context.iter().any(|s| &s.source_record == record_id) {
                return gold.clone();
            }
        }
        NO_ANSWER.to_string()
    }

    fn embed(&self, input: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(input.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        (0..EMBED_DIM).map(|_| rng.sample(StandardNormal)).collect()
    }
}

/// Client for an Ollama-compatible model server.
#[derive(Debug, Clone)]
pub struct HttpLm {
    client: reqwest::blocking::Client,
    base_url: String,
    model: String,
    max_retries: u32,
    max_topics: usize,
    topic_prompt: String,
    answer_prompt: String,
}

const RETRY_BACKOFF: Duration = Duration::from_millis(200);

impl HttpLm {
    pub fn new(cfg: &LmBackendConfig) -> Result<Self, LmError> {
        if cfg.base_url.trim().is_empty() {
            return Err(LmError::Config("http backend needs a base url".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| LmError::Config(e.to_string()))?;
        Ok(HttpLm {
            client,
            base_url: cfg.base_url.trim_end_matches('/').to_string(),
            model: cfg.model_name.clone(),
            max_retries: cfg.max_retries,
            max_topics: cfg.max_topics,
            topic_prompt: cfg.topic_prompt.clone(),
            answer_prompt: cfg.answer_prompt.clone(),
        })
    }

    /// One completion round trip with up to `max_retries` additional
    /// attempts on transport or HTTP errors, fixed backoff between tries.
    fn generate(&self, prompt: &str) -> Result<String, LmError> {
        let url = format!("{}/api/generate", self.base_url);
        let body = serde_json::json!({
            "model": self.model,
            "prompt": prompt,
            "stream": false,
        });
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(RETRY_BACKOFF);
            }
            match self.client.post(&url).json(&body).send() {
                Ok(resp) => match resp.error_for_status() {
                    Ok(resp) => {
                        let value: serde_json::Value = resp
                            .json()
                            .map_err(|e| LmError::BadResponse(e.to_string()))?;
                        return value
                            .get("response")
                            .and_then(|v| v.as_str())
                            .map(|s| s.trim().to_string())
                            .ok_or_else(|| {
                                LmError::BadResponse("missing response field".into())
                            });
                    }
                    Err(e) => last_err = e.to_string(),
                },
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(LmError::Transport { url, message: last_err })
    }

    fn embed(&self, input: &str) -> Result<Vec<f64>, LmError> {
        let url = format!("{}/api/embeddings", self.base_url);
        let body = serde_json::json!({ "model": self.model, "prompt": input });
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(RETRY_BACKOFF);
            }
            match self.client.post(&url).json(&body).send() {
                Ok(resp) => match resp.error_for_status() {
                    Ok(resp) => {
                        let value: serde_json::Value = resp
                            .json()
                            .map_err(|e| LmError::BadResponse(e.to_string()))?;
                        let arr = value
                            .get("embedding")
                            .and_then(|v| v.as_array())
                            .ok_or_else(|| {
                                LmError::BadResponse("missing embedding field".into())
                            })?;
                        let floats: Option<Vec<f64>> =
                            arr.iter().map(|v| v.as_f64()).collect();
                        return floats.ok_or_else(|| {
                            LmError::BadResponse("non-numeric embedding entry".into())
                        });
                    }
                    Err(e) => last_err = e.to_string(),
                },
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(LmError::Transport { url, message: last_err })
    }

    fn extract_topics(&self, query_text: &str) -> TopicExtraction {
        let prompt = self
            .topic_prompt
            .replace("{max_topics}", &self.max_topics.to_string())
            .replace("{query}", query_text);
        let topics = match self.generate(&prompt) {
            Ok(response) => {
                TopicSet::from_labels(parse_topic_labels(&response), self.max_topics)
            }
            Err(_) => TopicSet::default(),
        };
        if topics.is_empty() {
            TopicExtraction { topics: fallback_topics(query_text), used_fallback: true }
        } else {
            TopicExtraction { topics, used_fallback: false }
        }
    }

    fn generate_answer(
        &self,
        query_text: &str,
        context: &[KnowledgeSnippet],
    ) -> Result<String, LmError> {
        let context_block = if context.is_empty() {
            "(no context)".to_string()
        } else {
            context
                .iter()
                .map(|s| format!("- {}", s.text))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let prompt = self
            .answer_prompt
            .replace("{context}", &context_block)
            .replace("{query}", query_text);
        self.generate(&prompt)
    }

    fn health_check(&self) -> Result<(), LmError> {
        self.client
            .get(&self.base_url)
            .send()
            .map(|_| ())
            .map_err(|e| LmError::Transport {
                url: self.base_url.clone(),
                message: e.to_string(),
            })
    }
}

/// Splits a model's topic reply on commas, semicolons, and newlines.
fn parse_topic_labels(response: &str) -> Vec<String> {
    response
        .split([',', ';', '\n'])
        .map(|part| part.trim().to_string())
        .filter(|part| !part.is_empty())
        .collect()
}

/// Unified backend handle used by scoring, search, and generation.
#[derive(Debug, Clone)]
pub enum LmBackend {
    Mock(MockLm),
    Http(HttpLm),
}

impl LmBackend {
    /// Builds a backend from configuration; the mock needs the dataset it
    /// will stand in for.
    pub fn from_config(
        cfg: &LmBackendConfig,
        records: &[DatasetRecord],
    ) -> Result<Self, LmError> {
        match cfg.kind {
            LmKind::Mock => Ok(LmBackend::Mock(MockLm::new(records, cfg.mock_seed))),
            LmKind::Http => Ok(LmBackend::Http(HttpLm::new(cfg)?)),
        }
    }

    /// Topic labels for a query; never fails, see [`TopicExtraction`].
    pub fn extract_topics(&self, query_text: &str) -> TopicExtraction {
        match self {
            LmBackend::Mock(m) => m.extract_topics(query_text),
            LmBackend::Http(h) => h.extract_topics(query_text),
        }
    }

    /// Answer text for a query given retrieved context snippets.
    pub fn generate_answer(
        &self,
        query_text: &str,
        context: &[KnowledgeSnippet],
    ) -> Result<String, LmError> {
        match self {
            LmBackend::Mock(m) => Ok(m.generate_answer(query_text, context)),
            LmBackend::Http(h) => h.generate_answer(query_text, context),
        }
    }

    /// Embedding vector for a text.
    pub fn embed(&self, input: &str) -> Result<Vec<f64>, LmError> {
        match self {
            LmBackend::Mock(m) => Ok(m.embed(input)),
            LmBackend::Http(h) => h.embed(input),
        }
    }

    /// Cheap reachability probe; always healthy for the mock.
    pub fn health_check(&self) -> Result<(), LmError> {
        match self {
            LmBackend::Mock(_) => Ok(()),
            LmBackend::Http(h) => h.health_check(),
        }
    }
}
