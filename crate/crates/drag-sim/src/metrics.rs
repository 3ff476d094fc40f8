//! Token-level answer scoring and run-level aggregation.
//!
//! Answers are compared to gold answers after a normalization borrowed from
//! reading-comprehension evaluation: lowercase, punctuation to spaces, the
//! articles a/an/the dropped, then whitespace split. Exact match requires
//! the identical token sequence; precision, recall, and F1 come from the
//! multiset overlap of tokens. Two empty strings count as a perfect match.
//! Normalization can be switched off, leaving raw whitespace tokens.
//!
//! [`aggregate`] folds a run's traces and answers into one report: hit
//! rate (the fraction of queries whose search returned shareable
//! knowledge), mean hops over hits, mean and spread of message cost, and
//! the token metrics against the gold answers. Inputs are matched by query
//! id, so callers can hand over traces and answers in any order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rag::Answer;
use crate::routing::{Scheme, SearchTrace};
use crate::text;

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Normalized answer tokens: lowercase, punctuation stripped, articles
/// removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text::content_tokens(text)
        .into_iter()
        .filter(|t| !ARTICLES.contains(&t.as_str()))
        .collect()
}

/// Raw whitespace tokens, for scoring without normalization.
pub fn tokenize_raw(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Token-level agreement between a predicted and a gold answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenMetrics {
    pub em: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Scores a prediction against a gold answer with normalization on.
pub fn token_metrics(prediction: &str, gold: &str) -> TokenMetrics {
    token_metrics_with(prediction, gold, true)
}

pub fn token_metrics_with(prediction: &str, gold: &str, normalize: bool) -> TokenMetrics {
    let (pred, gold) = if normalize {
        (tokenize(prediction), tokenize(gold))
    } else {
        (tokenize_raw(prediction), tokenize_raw(gold))
    };
    if pred.is_empty() && gold.is_empty() {
        return TokenMetrics { em: 1.0, f1: 1.0, precision: 1.0, recall: 1.0 };
    }
    let mut gold_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in &gold {
        *gold_counts.entry(tok.as_str()).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for tok in &pred {
        if let Some(count) = gold_counts.get_mut(tok.as_str()) {
            if *count > 0 {
                *count -= 1;
                overlap += 1;
            }
        }
    }
    let precision = if pred.is_empty() { 0.0 } else { overlap as f64 / pred.len() as f64 };
    let recall = if gold.is_empty() { 0.0 } else { overlap as f64 / gold.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let em = if pred == gold { 1.0 } else { 0.0 };
    TokenMetrics { em, f1, precision, recall }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot aggregate: {0}")]
    Mismatch(String),
}

/// Configuration echo carried inside every report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub dataset: String,
    pub llm: String,
    pub peers: usize,
    pub connectivity: usize,
    pub k: usize,
    pub h_max: usize,
    pub theta: f64,
    pub placement: String,
    pub crag_variant: String,
    pub seed_topology: u64,
    pub seed_placement: u64,
    pub seed_walk: u64,
}

/// Aggregate metrics of one experiment run. Rates and token scores are
/// fractions in [0, 1]; spreads are population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scheme: Scheme,
    pub config: ReportConfig,
    pub n_queries: usize,
    pub hit_rate: f64,
    /// Mean hop distance of hits; None when no hit carried a hop count
    /// (cache hits do not).
    pub avg_hops: Option<f64>,
    pub avg_messages: f64,
    pub std_messages: f64,
    pub em: f64,
    pub f1: f64,
    pub std_f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Column order of report.csv and sweep summary rows.
pub const CSV_HEADER: [&str; 24] = [
    "scheme",
    "dataset",
    "llm",
    "peers",
    "connectivity",
    "k",
    "h_max",
    "theta",
    "placement",
    "crag_variant",
    "seed_topology",
    "seed_placement",
    "seed_walk",
    "n_queries",
    "hit_rate",
    "avg_hops",
    "avg_messages",
    "std_messages",
    "em",
    "f1",
    "std_f1",
    "precision",
    "recall",
    "error",
];

impl MetricsReport {
    /// One CSV row in [`CSV_HEADER`] order; the error column is empty for
    /// a completed run.
    pub fn csv_record(&self) -> Vec<String> {
        let c = &self.config;
        vec![
            self.scheme.to_string(),
            c.dataset.clone(),
            c.llm.clone(),
            c.peers.to_string(),
            c.connectivity.to_string(),
            c.k.to_string(),
            c.h_max.to_string(),
            c.theta.to_string(),
            c.placement.clone(),
            c.crag_variant.clone(),
            c.seed_topology.to_string(),
            c.seed_placement.to_string(),
            c.seed_walk.to_string(),
            self.n_queries.to_string(),
            self.hit_rate.to_string(),
            self.avg_hops.map(|h| h.to_string()).unwrap_or_default(),
            self.avg_messages.to_string(),
            self.std_messages.to_string(),
            self.em.to_string(),
            self.f1.to_string(),
            self.std_f1.to_string(),
            self.precision.to_string(),
            self.recall.to_string(),
            String::new(),
        ]
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} queries, hit_rate {:.4}, avg_messages {:.2}, em {:.4}, f1 {:.4}",
            self.scheme, self.n_queries, self.hit_rate, self.avg_messages, self.em, self.f1
        )?;
        if let Some(h) = self.avg_hops {
            write!(f, ", avg_hops {h:.2}")?;
        }
        Ok(())
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Folds matched traces and answers into one report. Traces and answers
/// must cover the same query ids exactly once each, all under one scheme,
/// and every id needs a gold answer.
pub fn aggregate(
    traces: &[SearchTrace],
    answers: &[Answer],
    golds: &BTreeMap<String, String>,
    normalize: bool,
    config: ReportConfig,
) -> Result<MetricsReport, EvalError> {
    if traces.is_empty() {
        return Err(EvalError::Mismatch("no traces to aggregate".into()));
    }
    if traces.len() != answers.len() {
        return Err(EvalError::Mismatch(format!(
            "{} traces but {} answers",
            traces.len(),
            answers.len()
        )));
    }
    let scheme = traces[0].scheme;
    let mut trace_by_id: BTreeMap<&str, &SearchTrace> = BTreeMap::new();
    for trace in traces {
        if trace.scheme != scheme {
            return Err(EvalError::Mismatch(format!(
                "mixed schemes {} and {}",
                scheme, trace.scheme
            )));
        }
        if trace_by_id.insert(&trace.query_id, trace).is_some() {
            return Err(EvalError::Mismatch(format!("duplicate trace {}", trace.query_id)));
        }
    }
    let mut answer_by_id: BTreeMap<&str, &Answer> = BTreeMap::new();
    for answer in answers {
        if answer_by_id.insert(&answer.query_id, answer).is_some() {
            return Err(EvalError::Mismatch(format!("duplicate answer {}", answer.query_id)));
        }
    }

    let mut hits = 0usize;
    let mut hop_samples: Vec<f64> = Vec::new();
    let mut message_samples: Vec<f64> = Vec::new();
    let mut em_sum = 0.0;
    let mut f1_samples: Vec<f64> = Vec::new();
    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;

    for (id, trace) in &trace_by_id {
        let answer = answer_by_id
            .get(id)
            .ok_or_else(|| EvalError::Mismatch(format!("trace {id} has no answer")))?;
        let gold = golds
            .get(*id)
            .ok_or_else(|| EvalError::Mismatch(format!("query {id} has no gold answer")))?;
        if trace.is_productive_hit() {
            hits += 1;
            if let Some(h) = trace.hops_to_hit {
                hop_samples.push(h as f64);
            }
        }
        message_samples.push(trace.messages_sent as f64);
        let scores = token_metrics_with(&answer.text, gold, normalize);
        em_sum += scores.em;
        f1_samples.push(scores.f1);
        precision_sum += scores.precision;
        recall_sum += scores.recall;
    }
    if answer_by_id.len() != trace_by_id.len() {
        return Err(EvalError::Mismatch("answers cover extra query ids".into()));
    }

    let n = trace_by_id.len();
    Ok(MetricsReport {
        scheme,
        config,
        n_queries: n,
        hit_rate: hits as f64 / n as f64,
        avg_hops: if hop_samples.is_empty() { None } else { Some(mean(&hop_samples)) },
        avg_messages: mean(&message_samples),
        std_messages: population_std(&message_samples),
        em: em_sum / n as f64,
        f1: mean(&f1_samples),
        std_f1: population_std(&f1_samples),
        precision: precision_sum / n as f64,
        recall: recall_sum / n as f64,
    })
}
