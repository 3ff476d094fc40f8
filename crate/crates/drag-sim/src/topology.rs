//! Peer overlay graphs.
//!
//! The simulator runs on scale-free overlays produced by preferential
//! attachment: `m` initial isolated peers, then one peer at a time, each
//! attaching to `m` distinct existing peers drawn with probability
//! proportional to `degree + 1` (the offset lets degree-zero peers be
//! chosen, and duplicate draws are simply redrawn). The first attached peer
//! links to every initial peer, so the result is always connected and has
//! exactly `(n - m) * m` edges.
//!
//! Hand-built shapes (path, star, ring, complete) are provided for tests
//! that need known distances, and [`Topology::from_edges`] for loading an
//! explicit edge list.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::{self, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense peer identifier in `0..n`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct PeerId(pub usize);

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("preferential attachment needs n > m >= 1, got n={n}, m={m}")]
    InvalidParams { n: usize, m: usize },
    #[error("peer {peer} out of range for topology of {n} peers")]
    UnknownPeer { peer: PeerId, n: usize },
    #[error("malformed edge list: {0}")]
    MalformedEdges(String),
}

/// Undirected simple connected graph over peers `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: Vec<BTreeSet<PeerId>>,
}

impl Topology {
    /// Generates a preferential-attachment overlay with `n` peers, `m` links
    /// per arriving peer, and a dedicated RNG stream for the given seed.
    pub fn generate_ba(n: usize, m: usize, seed: u64) -> Result<Self, TopologyError> {
        if m < 1 || n <= m {
            return Err(TopologyError::InvalidParams { n, m });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut adjacency: Vec<BTreeSet<PeerId>> = vec![BTreeSet::new(); n];
        for new in m..n {
            let weights: Vec<f64> =
                adjacency[..new].iter().map(|nb| nb.len() as f64 + 1.0).collect();
            let dist = WeightedIndex::new(&weights)
                .expect("attachment weights are positive and nonempty");
            let mut targets: BTreeSet<usize> = BTreeSet::new();
            while targets.len() < m {
                targets.insert(dist.sample(&mut rng));
            }
            for t in targets {
                adjacency[new].insert(PeerId(t));
                adjacency[t].insert(PeerId(new));
            }
        }
        Ok(Topology { adjacency })
    }

    /// Builds a topology from an explicit undirected edge list, rejecting
    /// self-loops, out-of-range endpoints, and disconnected results.
    /// Duplicate and reversed entries collapse to one edge.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::MalformedEdges("no peers".into()));
        }
        let mut adjacency: Vec<BTreeSet<PeerId>> = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(TopologyError::MalformedEdges(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(TopologyError::MalformedEdges(format!(
                    "edge {u}-{v} out of range for {n} peers"
                )));
            }
            adjacency[u].insert(PeerId(v));
            adjacency[v].insert(PeerId(u));
        }
        let topo = Topology { adjacency };
        if !topo.is_connected() {
            return Err(TopologyError::MalformedEdges("graph is not connected".into()));
        }
        Ok(topo)
    }

    /// Path 0-1-2-...-(n-1).
    pub fn path(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n.max(1), &edges).expect("path edges are well formed")
    }

    /// Star with peer 0 at the center.
    pub fn star(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (0, i)).collect();
        Self::from_edges(n.max(1), &edges).expect("star edges are well formed")
    }

    /// Cycle 0-1-...-(n-1)-0; needs n >= 3.
    pub fn ring(n: usize) -> Self {
        assert!(n >= 3, "a ring needs at least 3 peers");
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        Self::from_edges(n, &edges).expect("ring edges are well formed")
    }

    /// Clique over n peers.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Self::from_edges(n.max(1), &edges).expect("clique edges are well formed")
    }

    pub fn peer_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn peers(&self) -> impl Iterator<Item = PeerId> {
        (0..self.adjacency.len()).map(PeerId)
    }

    pub fn contains(&self, peer: PeerId) -> bool {
        peer.0 < self.adjacency.len()
    }

    /// Neighbor set of a peer, ascending by id.
    pub fn neighbors(&self, peer: PeerId) -> Result<&BTreeSet<PeerId>, TopologyError> {
        self.adjacency
            .get(peer.0)
            .ok_or(TopologyError::UnknownPeer { peer, n: self.adjacency.len() })
    }

    pub fn degree(&self, peer: PeerId) -> Result<usize, TopologyError> {
        Ok(self.neighbors(peer)?.len())
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        if self.adjacency.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.adjacency.len()];
        let mut queue = VecDeque::from([PeerId(0)]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(p) = queue.pop_front() {
            for &nb in &self.adjacency[p.0] {
                if !seen[nb.0] {
                    seen[nb.0] = true;
                    reached += 1;
                    queue.push_back(nb);
                }
            }
        }
        reached == self.adjacency.len()
    }

    /// Breadth-first hop distance between two peers; None when unreachable.
    pub fn shortest_path_hops(&self, from: PeerId, to: PeerId) -> Result<Option<usize>, TopologyError> {
        if !self.contains(from) {
            return Err(TopologyError::UnknownPeer { peer: from, n: self.adjacency.len() });
        }
        if !self.contains(to) {
            return Err(TopologyError::UnknownPeer { peer: to, n: self.adjacency.len() });
        }
        let mut dist = vec![usize::MAX; self.adjacency.len()];
        dist[from.0] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            if p == to {
                return Ok(Some(dist[p.0]));
            }
            for &nb in &self.adjacency[p.0] {
                if dist[nb.0] == usize::MAX {
                    dist[nb.0] = dist[p.0] + 1;
                    queue.push_back(nb);
                }
            }
        }
        Ok(None)
    }

    /// Writes one `u v` line per edge with u < v, ascending.
    pub fn write_edge_list(&self, out: &mut impl Write) -> io::Result<()> {
        for (u, nbs) in self.adjacency.iter().enumerate() {
            for nb in nbs {
                if u < nb.0 {
                    writeln!(out, "{} {}", u, nb.0)?;
                }
            }
        }
        Ok(())
    }
}
