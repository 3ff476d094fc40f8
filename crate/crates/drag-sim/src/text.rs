//! Small text helpers shared by caching, scoring, and topic extraction.

use std::collections::BTreeMap;

/// Canonical cache key for a query: lowercased with runs of whitespace
/// collapsed to single spaces.
pub(crate) fn normalize_query_key(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercases, maps punctuation to spaces, and splits on whitespace.
pub(crate) fn content_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Fallback topic labels for a piece of text: the `max` most frequent
/// content tokens, articles excluded, ranked by count descending with ties
/// broken by first occurrence. Texts made only of articles fall back to the
/// raw token ranking so any non-blank input yields at least one label.
pub(crate) fn top_content_tokens(text: &str, max: usize) -> Vec<String> {
    let all = content_tokens(text);
    let content: Vec<String> =
        all.iter().filter(|t| !ARTICLES.contains(&t.as_str())).cloned().collect();
    let pool = if content.is_empty() { all } else { content };
    let mut first_seen: Vec<String> = Vec::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in &pool {
        if !counts.contains_key(tok.as_str()) {
            first_seen.push(tok.clone());
        }
        *counts.entry(tok.as_str()).or_insert(0) += 1;
    }
    let mut ranked: Vec<(usize, String)> = first_seen
        .iter()
        .enumerate()
        .map(|(pos, tok)| (pos, tok.clone()))
        .collect();
    ranked.sort_by(|a, b| counts[b.1.as_str()].cmp(&counts[a.1.as_str()]).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(max).map(|(_, tok)| tok).collect()
}

/// Term frequency map over a token list.
pub(crate) fn term_frequencies(tokens: &[String]) -> BTreeMap<String, f64> {
    let mut tf = BTreeMap::new();
    for tok in tokens {
        *tf.entry(tok.clone()).or_insert(0.0) += 1.0;
    }
    tf
}

/// Smoothed inverse document frequencies over a fixed corpus:
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1.
#[derive(Debug, Clone, Default)]
pub(crate) struct IdfStats {
    n_docs: usize,
    df: BTreeMap<String, usize>,
}

impl IdfStats {
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a str>) -> Self {
        let mut n_docs = 0;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            n_docs += 1;
            let mut seen: Vec<String> = content_tokens(doc);
            seen.sort();
            seen.dedup();
            for tok in seen {
                *df.entry(tok).or_insert(0) += 1;
            }
        }
        IdfStats { n_docs, df }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    /// tf-idf weight vector for a text under these corpus statistics.
    pub fn weights(&self, text: &str) -> BTreeMap<String, f64> {
        let mut w = term_frequencies(&content_tokens(text));
        for (term, tf) in w.iter_mut() {
            *tf *= self.idf(term);
        }
        w
    }
}

/// Cosine similarity of two sparse weight vectors; 0.0 when either is empty.
pub(crate) fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(term, wa)| b.get(term).map(|wb| wa * wb))
        .sum();
    let na: f64 = a.values().map(|w| w * w).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|w| w * w).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
