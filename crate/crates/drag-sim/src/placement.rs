//! Turning dataset records into per-peer snippet stores.
//!
//! Each record yields one snippet (its support passage). Uniform placement
//! drops every snippet on an independently random peer; topic placement
//! assigns the sorted distinct topics round-robin to peers and puts each
//! snippet on the peer that owns its first topic, so peers specialize. The
//! harness keeps a gold index of which peer holds which record; nothing in
//! the network sees it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::DatasetRecord;
use crate::knowledge::{KnowledgeSnippet, SnippetStore};
use crate::lm::{LmBackend, TopicSet, FALLBACK_TOPIC_COUNT};
use crate::topology::{PeerId, Topology};

/// Knowledge distribution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Uniform,
    ByTopic,
}

impl Placement {
    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Uniform => "uniform",
            Placement::ByTopic => "by_topic",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Placement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Placement::Uniform),
            "by_topic" => Ok(Placement::ByTopic),
            other => Err(format!(
                "unknown placement {other:?}, expected uniform or by_topic"
            )),
        }
    }
}

/// Harness-side record of where each gold snippet landed.
#[derive(Debug, Clone, Default)]
pub struct GoldIndex {
    holder_by_record: BTreeMap<String, PeerId>,
}

impl GoldIndex {
    pub fn holder(&self, record_id: &str) -> Option<PeerId> {
        self.holder_by_record.get(record_id).copied()
    }

    pub fn len(&self) -> usize {
        self.holder_by_record.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holder_by_record.is_empty()
    }
}

/// Builds the snippet for a record. Topics come from the record's own topic
/// label when present, otherwise from topic extraction over the support
/// text, so they are never empty.
pub fn snippet_from_record(record: &DatasetRecord, lm: &LmBackend) -> KnowledgeSnippet {
    let topics = match &record.topic {
        Some(label) => TopicSet::from_labels([label.as_str()], FALLBACK_TOPIC_COUNT),
        None => lm.extract_topics(&record.support_text).topics,
    };
    KnowledgeSnippet {
        snippet_id: format!("s-{}", record.record_id),
        text: record.support_text.clone(),
        topics: topics.iter().cloned().collect(),
        source_record: record.record_id.clone(),
        private: false,
    }
}

/// Distributes one snippet per record over the topology's peers and returns
/// the stores plus the gold index.
pub fn place_knowledge(
    records: &[DatasetRecord],
    topology: &Topology,
    placement: Placement,
    seed: u64,
    lm: &LmBackend,
) -> (Vec<SnippetStore>, GoldIndex) {
    let n = topology.peer_count();
    let mut stores: Vec<SnippetStore> = (0..n).map(|_| SnippetStore::new()).collect();
    let mut gold = GoldIndex::default();
    let snippets: Vec<KnowledgeSnippet> =
        records.iter().map(|r| snippet_from_record(r, lm)).collect();

    let holders: Vec<PeerId> = match placement {
        Placement::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            snippets.iter().map(|_| PeerId(rng.random_range(0..n))).collect()
        }
        Placement::ByTopic => {
            let owner_by_topic: BTreeMap<&str, PeerId> = snippets
                .iter()
                .flat_map(|s| s.topics.iter().map(String::as_str))
                .collect::<std::collections::BTreeSet<&str>>()
                .into_iter()
                .enumerate()
                .map(|(i, topic)| (topic, PeerId(i % n)))
                .collect();
            snippets
                .iter()
                .map(|s| {
                    let first = s.topics.iter().next().expect("snippet topics are nonempty");
                    owner_by_topic[first.as_str()]
                })
                .collect()
        }
    };
    for (snippet, holder) in snippets.into_iter().zip(holders) {
        gold.holder_by_record.insert(snippet.source_record.clone(), holder);
        stores[holder.0]
            .insert(snippet)
            .expect("record ids are unique, so snippet ids are too");
    }
    (stores, gold)
}
