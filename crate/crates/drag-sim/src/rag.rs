//! Answer pipelines: distributed retrieval, centralized retrieval, and
//! retrieval-free generation.
//!
//! The distributed pipeline ([`World::answer_query`]) resolves a query in
//! five phases: consult the origin peer's result cache, analyze the query
//! (topic extraction happens inside the search), search the overlay for a
//! peer clearing the relevance threshold (the origin's own store is the
//! hop-0 candidate and costs nothing), generate an answer from whatever
//! knowledge came back, and cache successful results so the same question
//! never touches the network twice. Expertise learned from hits persists in
//! the origin's cache across queries; that accumulation is what makes the
//! topic-aware scheme cheaper over time.
//!
//! The centralized baseline holds every snippet in one place and retrieves
//! top-j by relevance; coverage-degraded variants drop a fraction of
//! snippets or topics to model an incomplete central collection. The
//! retrieval-free baseline generates from an empty context.
//!
//! A model transport failure during generation never aborts a run: the
//! answer becomes a sentinel string, the trace is flagged, and scoring
//! simply counts the query as answered incorrectly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::knowledge::{
    CachedResult, KnowledgeSnippet, PrivacyPolicy, Query, ResultCache, Scorer, SnippetStore,
};
use crate::lm::LmBackend;
use crate::routing::{
    search, ExpertiseCache, Outcome, Retrieved, Scheme, SearchContext, SearchParams, SearchTrace,
};
use crate::topology::Topology;

/// Answer text when generation itself failed in transport.
pub const LM_FAILURE_ANSWER: &str = "[lm-error]";

/// Final answer for one query, as written to answers.jsonl.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub query_id: String,
    pub mode: Scheme,
    pub text: String,
    pub used_snippets: Vec<String>,
    pub from_cache: bool,
}

/// Coverage of the centralized baseline's collection: everything, a random
/// 70% or 50% of snippets, or the snippets of a random 70% or 50% of
/// topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CragVariant {
    Full,
    S070,
    S050,
    T070,
    T050,
}

impl CragVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            CragVariant::Full => "full",
            CragVariant::S070 => "s070",
            CragVariant::S050 => "s050",
            CragVariant::T070 => "t070",
            CragVariant::T050 => "t050",
        }
    }
}

impl fmt::Display for CragVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CragVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(CragVariant::Full),
            "s070" => Ok(CragVariant::S070),
            "s050" => Ok(CragVariant::S050),
            "t070" => Ok(CragVariant::T070),
            "t050" => Ok(CragVariant::T050),
            other => Err(format!(
                "unknown crag variant {other:?}, expected full, s070, s050, t070, or t050"
            )),
        }
    }
}

/// The centralized baseline's snippet collection.
#[derive(Debug, Clone)]
pub struct CentralKb {
    store: SnippetStore,
    variant: CragVariant,
}

impl CentralKb {
    pub fn variant(&self) -> CragVariant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn store(&self) -> &SnippetStore {
        &self.store
    }
}

/// Builds the central collection for a variant. Snippet-dropping variants
/// keep floor(fraction * N) snippets chosen by seeded shuffle of the sorted
/// id list; topic-dropping variants keep the snippets intersecting
/// floor(fraction * T) of the sorted distinct topics, same shuffle rule.
pub fn build_central_kb(
    snippets: impl IntoIterator<Item = KnowledgeSnippet>,
    variant: CragVariant,
    seed: u64,
) -> CentralKb {
    let all: Vec<KnowledgeSnippet> = snippets.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept: Vec<KnowledgeSnippet> = match variant {
        CragVariant::Full => all,
        CragVariant::S070 | CragVariant::S050 => {
            let fraction = if variant == CragVariant::S070 { 0.7 } else { 0.5 };
            let mut ids: Vec<&str> = all.iter().map(|s| s.snippet_id.as_str()).collect();
            ids.sort();
            ids.shuffle(&mut rng);
            let keep: BTreeSet<String> = ids
                .into_iter()
                .take((fraction * all.len() as f64).floor() as usize)
                .map(str::to_string)
                .collect();
            all.into_iter().filter(|s| keep.contains(&s.snippet_id)).collect()
        }
        CragVariant::T070 | CragVariant::T050 => {
            let fraction = if variant == CragVariant::T070 { 0.7 } else { 0.5 };
            let mut topics: Vec<String> = all
                .iter()
                .flat_map(|s| s.topics.iter().cloned())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            topics.shuffle(&mut rng);
            let keep: BTreeSet<String> = topics
                .iter()
                .take((fraction * topics.len() as f64).floor() as usize)
                .cloned()
                .collect();
            all.into_iter()
                .filter(|s| s.topics.iter().any(|t| keep.contains(t)))
                .collect()
        }
    };
    let mut store = SnippetStore::new();
    for snippet in kept {
        store.insert(snippet).expect("snippet ids are unique");
    }
    CentralKb { store, variant }
}

/// Full simulated network: overlay, per-peer stores, per-peer expertise and
/// result caches, and the shared scoring and generation backends.
pub struct World {
    pub topology: Topology,
    pub stores: Vec<SnippetStore>,
    pub expertise: Vec<ExpertiseCache>,
    pub result_caches: Vec<ResultCache>,
    pub scorer: Scorer,
    pub lm: LmBackend,
    pub privacy: PrivacyPolicy,
}

impl World {
    pub fn new(
        topology: Topology,
        stores: Vec<SnippetStore>,
        scorer: Scorer,
        lm: LmBackend,
    ) -> Self {
        assert_eq!(stores.len(), topology.peer_count(), "one snippet store per peer");
        let expertise = topology.peers().map(ExpertiseCache::new).collect();
        let result_caches = topology.peers().map(|_| ResultCache::default()).collect();
        World {
            topology,
            stores,
            expertise,
            result_caches,
            scorer,
            lm,
            privacy: PrivacyPolicy::default(),
        }
    }

    pub fn with_privacy(mut self, privacy: PrivacyPolicy) -> Self {
        self.privacy = privacy;
        self
    }

    /// Distributed pipeline for one query under a search scheme. Infallible
    /// by design: transport trouble degrades the answer and flags the
    /// trace instead of aborting.
    pub fn answer_query(
        &mut self,
        query: &Query,
        params: &SearchParams,
        rng: &mut impl Rng,
    ) -> (Answer, SearchTrace) {
        assert!(params.scheme.is_search(), "{} is not a search scheme", params.scheme);
        assert!(
            self.topology.contains(query.origin),
            "query origin {} outside topology",
            query.origin
        );
        let origin = query.origin;

        if let Some(cached) = self.result_caches[origin.0].lookup(&query.text) {
            let ids: Vec<String> =
                cached.snippets.iter().map(|s| s.snippet_id.clone()).collect();
            let mut trace = SearchTrace::new(&query.query_id, params.scheme);
            trace.outcome = Outcome::Hit { peer: cached.contributing_peer, snippets: ids.clone() };
            let answer = Answer {
                query_id: query.query_id.clone(),
                mode: params.scheme,
                text: cached.answer.clone(),
                used_snippets: ids,
                from_cache: true,
            };
            return (answer, trace);
        }

        let ctx = SearchContext {
            topology: &self.topology,
            stores: &self.stores,
            scorer: &self.scorer,
            lm: &self.lm,
            privacy: &self.privacy,
        };
        let (retrieved, mut trace) =
            search(&ctx, query, params, &mut self.expertise[origin.0], rng);

        let (text, used, cacheable) = match &retrieved {
            Some(Retrieved { snippets, peer, .. }) => {
                match self.lm.generate_answer(&query.text, snippets) {
                    Ok(text) => {
                        let ids: Vec<String> =
                            snippets.iter().map(|s| s.snippet_id.clone()).collect();
                        (text, ids, Some((snippets.clone(), *peer)))
                    }
                    Err(_) => {
                        trace.lm_error = true;
                        (LM_FAILURE_ANSWER.to_string(), Vec::new(), None)
                    }
                }
            }
            None => match self.lm.generate_answer(&query.text, &[]) {
                Ok(text) => (text, Vec::new(), None),
                Err(_) => {
                    trace.lm_error = true;
                    (LM_FAILURE_ANSWER.to_string(), Vec::new(), None)
                }
            },
        };
        if let Some((snippets, peer)) = cacheable {
            self.result_caches[origin.0].store(
                &query.text,
                CachedResult { answer: text.clone(), snippets, contributing_peer: peer },
            );
        }
        let answer = Answer {
            query_id: query.query_id.clone(),
            mode: params.scheme,
            text,
            used_snippets: used,
            from_cache: false,
        };
        (answer, trace)
    }
}

/// Centralized baseline: top-j retrieval over the central collection, then
/// generation from the snippets that clear the threshold. No messages, no
/// caches.
pub fn answer_query_crag(
    query: &Query,
    kb: &CentralKb,
    scorer: &Scorer,
    lm: &LmBackend,
    theta: f64,
    top_j: usize,
) -> (Answer, SearchTrace) {
    let mut trace = SearchTrace::new(&query.query_id, Scheme::Crag);
    let context: Vec<KnowledgeSnippet> =
        match kb.store.query_ranked(&query.text, scorer, lm, top_j) {
            Ok(ranked) => ranked
                .into_iter()
                .filter(|(_, score)| score.value() >= theta)
                .map(|(snippet, _)| snippet.clone())
                .collect(),
            Err(_) => {
                trace.lm_error = true;
                Vec::new()
            }
        };
    if !context.is_empty() {
        trace.outcome = Outcome::Hit {
            peer: query.origin,
            snippets: context.iter().map(|s| s.snippet_id.clone()).collect(),
        };
    }
    let text = match lm.generate_answer(&query.text, &context) {
        Ok(text) => text,
        Err(_) => {
            trace.lm_error = true;
            LM_FAILURE_ANSWER.to_string()
        }
    };
    let answer = Answer {
        query_id: query.query_id.clone(),
        mode: Scheme::Crag,
        text,
        used_snippets: context.iter().map(|s| s.snippet_id.clone()).collect(),
        from_cache: false,
    };
    (answer, trace)
}

/// Retrieval-free baseline: generation from an empty context.
pub fn answer_query_norag(query: &Query, lm: &LmBackend) -> (Answer, SearchTrace) {
    let mut trace = SearchTrace::new(&query.query_id, Scheme::Norag);
    let text = match lm.generate_answer(&query.text, &[]) {
        Ok(text) => text,
        Err(_) => {
            trace.lm_error = true;
            LM_FAILURE_ANSWER.to_string()
        }
    };
    let answer = Answer {
        query_id: query.query_id.clone(),
        mode: Scheme::Norag,
        text,
        used_snippets: Vec::new(),
        from_cache: false,
    };
    (answer, trace)
}
