//! Metropolis-weighted average consensus over the swarm's comm graph.
//!
//! Each round, every agent replaces its pattern-probability vector with a
//! convex combination of its own and its neighbors' vectors, weighted by
//! `1 / (1 + max(d_i, d_j))`. The resulting weight matrix is symmetric and
//! doubly stochastic, so the swarm average is conserved and every agent
//! drifts toward it.
//!
//! [`weighted_update`] is the single arithmetic kernel: the centralized
//! [`consensus_step`] and the message-driven simulation both call it with
//! neighbor contributions in row-major sender order, which keeps the two
//! paths bit-identical when no messages are lost.

use crate::descriptor::{PatternClass, PatternProbs};
use crate::grid::{GridTopology, Neighborhood};
use alloc::vec::Vec;

/// Errors from comm-graph construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConsensusError {
    SelfLoop(usize),
    VertexOutOfRange { vertex: usize, len: usize },
}

impl core::fmt::Display for ConsensusError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConsensusError::SelfLoop(v) => write!(f, "self loop on vertex {}", v),
            ConsensusError::VertexOutOfRange { vertex, len } => {
                write!(f, "vertex {} out of range for {} vertices", vertex, len)
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConsensusError {}

/// An undirected communication graph over agent indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CommGraph {
    adj: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Builds a graph from undirected edges; duplicates are merged.
    pub fn new(
        len: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ConsensusError> {
        let mut adj = alloc::vec![Vec::new(); len];
        for (a, b) in edges {
            if a == b {
                return Err(ConsensusError::SelfLoop(a));
            }
            for v in [a, b] {
                if v >= len {
                    return Err(ConsensusError::VertexOutOfRange { vertex: v, len });
                }
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(CommGraph { adj })
    }

    /// The bounded-grid graph linking cells within `scheme` of each other.
    ///
    /// No boundary reflection here: edge cells simply have fewer neighbors,
    /// which is what keeps the Metropolis matrix doubly stochastic.
    pub fn grid(grid: &GridTopology, scheme: Neighborhood) -> Self {
        let mut edges = Vec::new();
        for cell in grid.cells() {
            for &offset in scheme.offsets() {
                if grid.offset_in_grid(cell, offset) {
                    let r = (cell.0 as i64 + offset.dy as i64) as usize;
                    let c = (cell.1 as i64 + offset.dx as i64) as usize;
                    let (i, j) = (grid.idx(cell), grid.idx((r, c)));
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
        CommGraph::new(grid.len(), edges).expect("grid edges are in range and loop-free")
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Vertex degree.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }
}

/// Metropolis weights over a comm graph.
///
/// Entries are derived from vertex degrees on demand:
/// `1 / (1 + max(d_i, d_j))` on edges, the row's complement on the
/// diagonal, 0 elsewhere.
#[derive(Clone, PartialEq, Debug)]
pub struct WeightAssignment {
    graph: CommGraph,
    degrees: Vec<usize>,
}

impl WeightAssignment {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    /// The weight `W[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            // Accumulated in neighbor order so it matches weighted_update's
            // self weight bit for bit.
            let mut sum = 0.0;
            for &k in self.graph.neighbors(i) {
                sum += edge_weight(self.degrees[i], self.degrees[k]);
            }
            1.0 - sum
        } else if self.graph.has_edge(i, j) {
            edge_weight(self.degrees[i], self.degrees[j])
        } else {
            0.0
        }
    }
}

fn edge_weight(da: usize, db: usize) -> f64 {
    1.0 / (1.0 + da.max(db) as f64)
}

/// Builds Metropolis weights for a graph.
pub fn metropolis_weights(graph: &CommGraph) -> WeightAssignment {
    let degrees = (0..graph.len()).map(|v| graph.degree(v)).collect();
    WeightAssignment { graph: graph.clone(), degrees }
}

/// One agent's consensus update from the contributions it heard.
///
/// `heard` carries `(probs, degree)` pairs in row-major sender order. Each
/// sender gets weight `1 / (1 + max(own_degree, sender_degree))` and the
/// agent keeps the remainder, so the combination is convex as long as
/// `own_degree + 1 >= heard.len()`.
pub fn weighted_update(
    own: PatternProbs,
    own_degree: usize,
    heard: &[(PatternProbs, usize)],
) -> PatternProbs {
    debug_assert!(own_degree + 1 >= heard.len(), "more contributions than degree");
    let mut wsum = 0.0;
    let mut acc = PatternProbs::new(0.0, 0.0, 0.0);
    for &(p, d) in heard {
        let w = edge_weight(own_degree, d);
        wsum += w;
        acc.p_h += w * p.p_h;
        acc.p_v += w * p.p_v;
        acc.p_m += w * p.p_m;
    }
    let w_self = 1.0 - wsum;
    PatternProbs::new(
        w_self * own.p_h + acc.p_h,
        w_self * own.p_v + acc.p_v,
        w_self * own.p_m + acc.p_m,
    )
}

/// One synchronous consensus round across all agents.
pub fn consensus_step(p: &[PatternProbs], weights: &WeightAssignment) -> Vec<PatternProbs> {
    assert_eq!(p.len(), weights.len(), "probability vector per vertex");
    (0..p.len())
        .map(|i| {
            let heard: Vec<(PatternProbs, usize)> = weights
                .graph()
                .neighbors(i)
                .iter()
                .map(|&j| (p[j], weights.degree(j)))
                .collect();
            weighted_update(p[i], weights.degree(i), &heard)
        })
        .collect()
}

/// The per-round history of a consensus run; `rounds[0]` is the input.
#[derive(Clone, PartialEq, Debug)]
pub struct ConsensusTrace {
    pub rounds: Vec<Vec<PatternProbs>>,
}

impl ConsensusTrace {
    /// The final round's values.
    pub fn last(&self) -> &[PatternProbs] {
        self.rounds.last().expect("trace holds at least the input round")
    }
}

/// Runs `rounds` consensus rounds, recording every intermediate state.
pub fn run_consensus(
    p0: &[PatternProbs],
    weights: &WeightAssignment,
    rounds: usize,
) -> ConsensusTrace {
    let mut trace = ConsensusTrace { rounds: Vec::with_capacity(rounds + 1) };
    trace.rounds.push(p0.to_vec());
    for _ in 0..rounds {
        let next = consensus_step(trace.last(), weights);
        trace.rounds.push(next);
    }
    trace
}

/// The winning class of a probability vector.
///
/// Exact ties resolve toward mottled (the texture that loses least when
/// wrong), then horizontal.
pub fn argmax_pattern(p: PatternProbs) -> PatternClass {
    let m = p.p_h.max(p.p_v).max(p.p_m);
    if p.p_m == m {
        PatternClass::Mottled
    } else if p.p_h == m {
        PatternClass::Horizontal
    } else {
        PatternClass::Vertical
    }
}

/// Whether the maximum of `p` is attained by more than one class.
pub fn argmax_is_tie(p: PatternProbs) -> bool {
    let m = p.p_h.max(p.p_v).max(p.p_m);
    p.components().iter().filter(|&&v| v == m).count() > 1
}
