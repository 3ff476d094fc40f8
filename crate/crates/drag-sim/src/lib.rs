//! Deterministic simulator for distributed retrieval-augmented generation
//! (DRAG) over peer-to-peer overlays.
//!
//! Peers sit on a scale-free overlay graph, each holding a private store of
//! knowledge snippets. A query entering the network at some origin peer is
//! answered in five steps: consult the origin's result cache, try the local
//! store, search the overlay for a peer whose store clears a relevance
//! threshold, generate an answer from the retrieved context, and cache the
//! result. Three search schemes are provided:
//!
//! * topic-aware random walk (`tarw`): a width-bounded, hop-bounded walk
//!   that scores candidate neighbors against an expertise cache learned
//!   from earlier successful retrievals,
//! * plain random walk (`rw`): one uniformly random unvisited neighbor per
//!   step,
//! * flooding (`fl`): hop-bounded frontier broadcast.
//!
//! Two non-distributed baselines, a centralized retriever (`crag`, with
//! degraded-coverage variants) and generation without retrieval (`norag`),
//! share the same answer and metrics plumbing so all five modes can be
//! compared on one report format.
//!
//! Everything is reproducible: topology generation, knowledge placement, and
//! walk decisions draw from three independently seeded ChaCha8 streams, and
//! all iteration that can influence behavior or output runs in a fixed
//! order. The [`experiment`] module turns a dataset plus a configuration
//! into per-query traces, per-query answers, and an aggregate report;
//! parameter sweeps fan cells out with rayon when the `parallel` feature
//! (enabled by default) is on, and fall back to a sequential loop otherwise.

pub mod dataset;
pub mod experiment;
pub mod knowledge;
pub mod lm;
pub mod metrics;
pub mod placement;
pub mod rag;
pub mod routing;
mod text;
pub mod topology;

pub use dataset::DatasetRecord;
pub use experiment::{ExperimentConfig, RunArtifacts, ScorerKind};
pub use knowledge::{
    KnowledgeSnippet, PrivacyPolicy, Query, RedactionRule, RelevanceScore, ResultCache, Scorer,
    SnippetStore,
};
pub use lm::{LmBackend, LmBackendConfig, LmError, LmKind, MockLm, TopicSet};
pub use metrics::{token_metrics, MetricsReport, TokenMetrics};
pub use placement::Placement;
pub use rag::{Answer, CentralKb, CragVariant, World};
pub use routing::{ExpertiseCache, Outcome, Retrieved, Scheme, SearchParams, SearchTrace};
pub use topology::{PeerId, Topology};
