//! Overlay search: topic-aware random walk, plain random walk, flooding.
//!
//! All three schemes share the same accounting rules. Testing a remote
//! peer's store costs one message (the forwarded query); a remote hit costs
//! one more (the returned knowledge); the origin tests its own store for
//! free. A trace records every peer whose store was consulted, in order,
//! plus the message count, the hop distance of the hit, and flags for topic
//! fallback and model transport trouble.
//!
//! The walk schemes run a shared engine: a FIFO frontier of `(peer, hop)`
//! pairs seeded with the origin at hop 0. Dequeued peers at hop >= `h_max`
//! are skipped, so `h_max` bounds the deepest tested peer at `h_max - 1`
//! and `h_max = 0` misses without testing anyone. A peer whose best local
//! snippet clears the relevance threshold ends the walk; otherwise its
//! unvisited neighbors are scored against the origin's expertise cache
//! (topic overlap ratio), the top `k` are enqueued, and peers are marked
//! visited at enqueue time so no store is ever consulted twice. The plain
//! random walk is the same engine with no expertise cache and `k = 1`;
//! with every candidate scored zero, top-1 selection degenerates to a
//! uniform random choice, which makes the two schemes decision-for-decision
//! comparable under one RNG stream.
//!
//! Flooding broadcasts hop by hop with a global visited set (first marker
//! wins) and stops after testing the frontier at hop `h_max`. Frontiers are
//! tested in ascending peer order, so the reported hit is the earliest-hop,
//! lowest-id peer that clears the threshold.
//!
//! On a topic-aware hit the origin's expertise cache learns that the hit
//! peer knows the query's topics, which is what later walks exploit.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::knowledge::{
    privacy_filter, KnowledgeSnippet, PrivacyPolicy, Query, RelevanceScore, Scorer, SnippetStore,
};
use crate::lm::{LmBackend, TopicSet};
use crate::topology::{PeerId, Topology};

/// Query resolution scheme. The first three search the overlay; `crag` and
/// `norag` are non-distributed baselines that reuse the same trace format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Tarw,
    Rw,
    Fl,
    Crag,
    Norag,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Tarw => "tarw",
            Scheme::Rw => "rw",
            Scheme::Fl => "fl",
            Scheme::Crag => "crag",
            Scheme::Norag => "norag",
        }
    }

    /// True for schemes that search the peer overlay.
    pub fn is_search(self) -> bool {
        matches!(self, Scheme::Tarw | Scheme::Rw | Scheme::Fl)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tarw" => Ok(Scheme::Tarw),
            "rw" => Ok(Scheme::Rw),
            "fl" => Ok(Scheme::Fl),
            "crag" => Ok(Scheme::Crag),
            "norag" => Ok(Scheme::Norag),
            other => Err(format!(
                "unknown scheme {other:?}, expected tarw, rw, fl, crag, or norag"
            )),
        }
    }
}

/// Knobs of one search: scheme, hop bound, walk width, relevance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub scheme: Scheme,
    pub h_max: usize,
    pub k: usize,
    pub theta: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { scheme: Scheme::Tarw, h_max: 6, k: 4, theta: 0.8 }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.k < 1 {
            return Err("walk width k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.theta) || self.theta.is_nan() {
            return Err(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        Ok(())
    }
}

/// What one peer has learned about which topics its acquaintances can
/// answer. Entries accumulate by set union and never expire; a peer keeps
/// no entry about itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertiseCache {
    owner: PeerId,
    entries: BTreeMap<PeerId, TopicSet>,
}

impl ExpertiseCache {
    pub fn new(owner: PeerId) -> Self {
        ExpertiseCache { owner, entries: BTreeMap::new() }
    }

    pub fn owner(&self) -> PeerId {
        self.owner
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn topics_for(&self, peer: PeerId) -> Option<&TopicSet> {
        self.entries.get(&peer)
    }

    pub fn entries(&self) -> impl Iterator<Item = (PeerId, &TopicSet)> {
        self.entries.iter().map(|(p, t)| (*p, t))
    }

    /// Records that `contributor` answered a query on these topics.
    pub fn update(&mut self, contributor: PeerId, topics: &TopicSet) {
        if contributor == self.owner {
            return;
        }
        self.entries.entry(contributor).or_default().union_with(topics);
    }
}

/// Search result when some peer cleared the threshold with shareable
/// knowledge.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved {
    pub snippets: Vec<KnowledgeSnippet>,
    pub peer: PeerId,
    pub score: RelevanceScore,
    pub hops: usize,
}

/// Terminal state of one search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Outcome {
    /// A peer cleared the threshold; `snippets` lists the ids that survived
    /// the privacy filter (possibly none).
    Hit { peer: PeerId, snippets: Vec<String> },
    Miss,
}

/// Per-query search record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub query_id: String,
    pub scheme: Scheme,
    pub messages_sent: u64,
    pub hops_to_hit: Option<usize>,
    pub visited: Vec<PeerId>,
    pub outcome: Outcome,
    pub topic_fallback: bool,
    pub lm_error: bool,
}

impl SearchTrace {
    pub(crate) fn new(query_id: &str, scheme: Scheme) -> Self {
        SearchTrace {
            query_id: query_id.to_string(),
            scheme,
            messages_sent: 0,
            hops_to_hit: None,
            visited: Vec::new(),
            outcome: Outcome::Miss,
            topic_fallback: false,
            lm_error: false,
        }
    }

    /// Hit with at least one shareable snippet; the hit-rate metric counts
    /// exactly these.
    pub fn is_productive_hit(&self) -> bool {
        matches!(&self.outcome, Outcome::Hit { snippets, .. } if !snippets.is_empty())
    }
}

/// Read-only view of the network a search runs against.
pub struct SearchContext<'a> {
    pub topology: &'a Topology,
    pub stores: &'a [SnippetStore],
    pub scorer: &'a Scorer,
    pub lm: &'a LmBackend,
    pub privacy: &'a PrivacyPolicy,
}

/// Expertise overlap score for each candidate neighbor: shared topic count
/// over query topic count (zero for unknown peers or empty topic sets).
pub fn score_neighbors(
    neighbors: &[PeerId],
    cache: &ExpertiseCache,
    topics: &TopicSet,
) -> Vec<f64> {
    neighbors
        .iter()
        .map(|p| {
            let shared = cache.topics_for(*p).map_or(0, |known| known.overlap(topics));
            shared as f64 / topics.len().max(1) as f64
        })
        .collect()
}

/// Shuffles candidates, then stable-sorts by score descending and keeps the
/// first `k`. The shuffle randomizes order among equal scores, so with all
/// scores equal and `k = 1` this is exactly a uniform random choice.
pub fn select_top_k(
    candidates: &[PeerId],
    scores: &[f64],
    k: usize,
    rng: &mut impl Rng,
) -> Vec<PeerId> {
    assert_eq!(candidates.len(), scores.len(), "one score per candidate");
    let mut pairs: Vec<(PeerId, f64)> =
        candidates.iter().copied().zip(scores.iter().copied()).collect();
    pairs.shuffle(rng);
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1));
    pairs.into_iter().take(k).map(|(p, _)| p).collect()
}

/// Walk engine behind both random-walk schemes. `beam_width` many unvisited
/// neighbors are enqueued per expansion; `expertise` carries the origin's
/// cache for the topic-aware variant and None for the plain walk.
fn walk_engine(
    ctx: &SearchContext<'_>,
    query: &Query,
    params: &SearchParams,
    scheme: Scheme,
    beam_width: usize,
    mut expertise: Option<&mut ExpertiseCache>,
    rng: &mut impl Rng,
) -> (Option<Retrieved>, SearchTrace) {
    assert_eq!(
        ctx.stores.len(),
        ctx.topology.peer_count(),
        "one snippet store per peer"
    );
    assert!(
        ctx.topology.contains(query.origin),
        "query origin {} outside topology",
        query.origin
    );
    let mut trace = SearchTrace::new(&query.query_id, scheme);
    let topics = if expertise.is_some() {
        let extraction = ctx.lm.extract_topics(&query.text);
        trace.topic_fallback = extraction.used_fallback;
        extraction.topics
    } else {
        TopicSet::default()
    };

    let origin = query.origin;
    let mut visited: BTreeSet<PeerId> = BTreeSet::from([origin]);
    let mut queue: VecDeque<(PeerId, usize)> = VecDeque::from([(origin, 0)]);

    while let Some((peer, hop)) = queue.pop_front() {
        if hop >= params.h_max {
            continue;
        }
        if peer != origin {
            trace.messages_sent += 1;
        }
        trace.visited.push(peer);

        let best = match ctx.stores[peer.0].query_local(&query.text, ctx.scorer, ctx.lm) {
            Ok(best) => best,
            Err(_) => {
                trace.lm_error = true;
                None
            }
        };
        if let Some((snippet, score)) = best {
            if score.value() >= params.theta {
                if let Some(cache) = expertise.as_deref_mut() {
                    cache.update(peer, &topics);
                }
                let shareable = privacy_filter(std::slice::from_ref(snippet), ctx.privacy);
                if peer != origin {
                    trace.messages_sent += 1;
                }
                trace.hops_to_hit = Some(hop);
                trace.outcome = Outcome::Hit {
                    peer,
                    snippets: shareable.iter().map(|s| s.snippet_id.clone()).collect(),
                };
                let retrieved = if shareable.is_empty() {
                    None
                } else {
                    Some(Retrieved { snippets: shareable, peer, score, hops: hop })
                };
                return (retrieved, trace);
            }
        }

        let candidates: Vec<PeerId> = ctx
            .topology
            .neighbors(peer)
            .expect("walk only reaches peers of the topology")
            .iter()
            .copied()
            .filter(|nb| !visited.contains(nb))
            .collect();
        let scores = match expertise.as_deref() {
            Some(cache) => score_neighbors(&candidates, cache, &topics),
            None => vec![0.0; candidates.len()],
        };
        for next in select_top_k(&candidates, &scores, beam_width, rng) {
            visited.insert(next);
            queue.push_back((next, hop + 1));
        }
    }
    (None, trace)
}

/// Topic-aware random walk: expertise-guided, width `k`. Updates the
/// origin's expertise cache on a hit.
pub fn tarw_search(
    ctx: &SearchContext<'_>,
    query: &Query,
    params: &SearchParams,
    expertise: &mut ExpertiseCache,
    rng: &mut impl Rng,
) -> (Option<Retrieved>, SearchTrace) {
    walk_engine(ctx, query, params, Scheme::Tarw, params.k, Some(expertise), rng)
}

/// Plain random walk: one uniformly random unvisited neighbor per step, no
/// expertise cache.
pub fn rw_search(
    ctx: &SearchContext<'_>,
    query: &Query,
    params: &SearchParams,
    rng: &mut impl Rng,
) -> (Option<Retrieved>, SearchTrace) {
    walk_engine(ctx, query, params, Scheme::Rw, 1, None, rng)
}

/// Hop-bounded flooding over a global visited set.
pub fn flood_search(
    ctx: &SearchContext<'_>,
    query: &Query,
    params: &SearchParams,
) -> (Option<Retrieved>, SearchTrace) {
    assert_eq!(
        ctx.stores.len(),
        ctx.topology.peer_count(),
        "one snippet store per peer"
    );
    assert!(
        ctx.topology.contains(query.origin),
        "query origin {} outside topology",
        query.origin
    );
    let origin = query.origin;
    let mut trace = SearchTrace::new(&query.query_id, Scheme::Fl);
    let mut marked: BTreeSet<PeerId> = BTreeSet::from([origin]);
    let mut frontier = vec![origin];

    for hop in 0..=params.h_max {
        trace.visited.extend(frontier.iter().copied());
        for &peer in &frontier {
            let best = match ctx.stores[peer.0].query_local(&query.text, ctx.scorer, ctx.lm) {
                Ok(best) => best,
                Err(_) => {
                    trace.lm_error = true;
                    None
                }
            };
            if let Some((snippet, score)) = best {
                if score.value() >= params.theta {
                    let shareable = privacy_filter(std::slice::from_ref(snippet), ctx.privacy);
                    if peer != origin {
                        trace.messages_sent += 1;
                    }
                    trace.hops_to_hit = Some(hop);
                    trace.outcome = Outcome::Hit {
                        peer,
                        snippets: shareable.iter().map(|s| s.snippet_id.clone()).collect(),
                    };
                    let retrieved = if shareable.is_empty() {
                        None
                    } else {
                        Some(Retrieved { snippets: shareable, peer, score, hops: hop })
                    };
                    return (retrieved, trace);
                }
            }
        }
        if hop == params.h_max {
            break;
        }
        let mut next = Vec::new();
        for &peer in &frontier {
            for &nb in ctx
                .topology
                .neighbors(peer)
                .expect("flood only reaches peers of the topology")
            {
                if marked.insert(nb) {
                    trace.messages_sent += 1;
                    next.push(nb);
                }
            }
        }
        next.sort();
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    (None, trace)
}

/// Dispatches on `params.scheme`; only overlay search schemes are legal
/// here.
pub fn search(
    ctx: &SearchContext<'_>,
    query: &Query,
    params: &SearchParams,
    expertise: &mut ExpertiseCache,
    rng: &mut impl Rng,
) -> (Option<Retrieved>, SearchTrace) {
    match params.scheme {
        Scheme::Tarw => tarw_search(ctx, query, params, expertise, rng),
        Scheme::Rw => rw_search(ctx, query, params, rng),
        Scheme::Fl => flood_search(ctx, query, params),
        other => panic!("{other} does not search the overlay"),
    }
}
