//! Undirected communication graphs between agents.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Resampling budget for [`generate_random_graph`].
pub const GRAPH_RETRY_CAP: u32 = 1000;

/// Largest agent count accepted from serialized input.
pub const MAX_AGENTS: usize = 4096;

/// Undirected simple graph on nodes `0..n`.
///
/// Edges are stored as `(i, j)` with `i < j`, sorted lexicographically and
/// without duplicates. A `CommGraph` value may be disconnected; use
/// [`CommGraph::is_connected`] before treating it as a communication network.
/// Deserialization additionally requires connectivity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct CommGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawGraph> for CommGraph {
    type Error = Error;
    fn try_from(raw: RawGraph) -> Result<Self> {
        if raw.n > MAX_AGENTS {
            return Err(Error::InvalidArgument(format!(
                "n = {} exceeds the supported maximum {MAX_AGENTS}",
                raw.n
            )));
        }
        for w in raw.edges.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Parse("edges must be strictly sorted".into()));
            }
        }
        if raw.edges.iter().any(|&(i, j)| i >= j) {
            return Err(Error::Parse(
                "edges must be written as [i, j] with i < j".into(),
            ));
        }
        let g = CommGraph::new(raw.n, raw.edges)?;
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }
}

impl From<CommGraph> for RawGraph {
    fn from(g: CommGraph) -> Self {
        RawGraph {
            n: g.n,
            edges: g.edges,
        }
    }
}

impl CommGraph {
    /// Builds a graph from unordered pairs. Pairs are normalized to `i < j`;
    /// duplicates, self-loops and out-of-range nodes are errors.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "graph needs at least one node".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut degrees = vec![0; n];
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            degrees[i] += 1;
            degrees[j] += 1;
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(CommGraph {
            n,
            edges,
            degrees,
            neighbors,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        CommGraph::new(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
    }

    pub fn path(n: usize) -> Result<Self> {
        CommGraph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Sorted neighbors of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Free-function form of [`CommGraph::is_connected`].
pub fn is_connected(g: &CommGraph) -> bool {
    g.is_connected()
}

/// One Erdős–Rényi draw on ChaCha substream `stream_id`; may be disconnected.
pub fn sample_graph(n: usize, link_prob: f64, seed: u64, stream_id: u64) -> Result<CommGraph> {
    check_graph_args(n, link_prob)?;
    let mut rng = rng::stream(seed, stream_id);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            // gen::<f64>() is in [0, 1), so link_prob = 1 always links.
            if rng.gen::<f64>() < link_prob {
                pairs.push((i, j));
            }
        }
    }
    CommGraph::new(n, pairs)
}

fn check_graph_args(n: usize, link_prob: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 agents, got {n}"
        )));
    }
    if n > MAX_AGENTS {
        return Err(Error::InvalidArgument(format!(
            "n = {n} exceeds {MAX_AGENTS}"
        )));
    }
    if !(link_prob > 0.0 && link_prob <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "link probability must lie in (0, 1], got {link_prob}"
        )));
    }
    Ok(())
}

/// Samples `G(n, link_prob)` and resamples on fresh substreams until the
/// result is connected. Attempt `k` uses substream `k`, so the output is a
/// pure function of `(n, link_prob, seed)`.
pub fn generate_random_graph(n: usize, link_prob: f64, seed: u64) -> Result<CommGraph> {
    check_graph_args(n, link_prob)?;
    for attempt in 0..GRAPH_RETRY_CAP {
        let g = sample_graph(n, link_prob, seed, u64::from(attempt))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::RetryCapExceeded {
        attempts: GRAPH_RETRY_CAP,
        reason: format!(
            "no connected sample; link probability {link_prob} is too small for n = {n}"
        ),
    })
}
