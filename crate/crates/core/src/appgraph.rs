//! Cluster graphs: the application side of the flow.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

pub type ClusterId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: ClusterId,
    pub dst: ClusterId,
    /// Spike traffic units. Only placement looks at it.
    pub weight: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one cluster")]
    NoClusters,
    #[error("edge {index}: cluster id {id} out of range (n_clusters = {n})")]
    IdOutOfRange { index: usize, id: usize, n: usize },
    #[error("edge {index}: self-loop on cluster {id}")]
    SelfLoop { index: usize, id: usize },
    #[error("edge {index}: duplicate edge ({src}, {dst})")]
    DuplicateEdge { index: usize, src: usize, dst: usize },
    #[error("{edges} edges requested but a simple directed graph on {n} clusters holds at most {max}")]
    TooManyEdges { n: usize, edges: usize, max: usize },
    #[error("density is undefined for fewer than two clusters")]
    TooFewClusters,
    #[error("empty weight range {lo}..={hi}")]
    BadWeightRange { lo: u32, hi: u32 },
}

/// Directed, simple, weighted graph of neuron clusters.
///
/// Edge ids are positions in `edges`; routing and grouping refer to paths by
/// these ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGraph {
    name: String,
    n_clusters: usize,
    edges: Vec<Edge>,
}

impl ClusterGraph {
    pub fn new(
        name: impl Into<String>,
        n_clusters: usize,
        edges: Vec<Edge>,
    ) -> Result<Self, GraphError> {
        if n_clusters == 0 {
            return Err(GraphError::NoClusters);
        }
        let mut seen = BTreeSet::new();
        for (index, e) in edges.iter().enumerate() {
            for id in [e.src, e.dst] {
                if id >= n_clusters {
                    return Err(GraphError::IdOutOfRange {
                        index,
                        id,
                        n: n_clusters,
                    });
                }
            }
            if e.src == e.dst {
                return Err(GraphError::SelfLoop { index, id: e.src });
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(GraphError::DuplicateEdge {
                    index,
                    src: e.src,
                    dst: e.dst,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            n_clusters,
            edges,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_clusters];
        for e in &self.edges {
            d[e.src] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_clusters];
        for e in &self.edges {
            d[e.dst] += 1;
        }
        d
    }

    /// In-degree plus out-degree per cluster.
    pub fn total_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_clusters];
        for e in &self.edges {
            d[e.src] += 1;
            d[e.dst] += 1;
        }
        d
    }

    pub fn max_total_degree(&self) -> usize {
        self.total_degrees().into_iter().max().unwrap_or(0)
    }

    /// Largest number of connections touching a single cluster. Every such
    /// group lands on one rung, so no grouping can use fewer scenarios.
    pub fn scenario_lower_bound(&self) -> usize {
        self.max_total_degree()
    }

    pub fn metrics(&self) -> Result<GraphMetrics, GraphError> {
        GraphMetrics::of(self)
    }
}

/// Largest edge count of a simple directed graph on `n` vertices.
pub fn max_edges(n: usize) -> usize {
    n * n.saturating_sub(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub n_clusters: usize,
    pub n_edges: usize,
    /// E / n.
    pub avg_degree: f64,
    /// E / (n (n - 1)).
    pub density: f64,
    pub max_total_degree: usize,
    pub max_out_degree: usize,
    pub max_in_degree: usize,
}

impl GraphMetrics {
    pub fn of(g: &ClusterGraph) -> Result<Self, GraphError> {
        let n = g.n_clusters();
        if n < 2 {
            return Err(GraphError::TooFewClusters);
        }
        let e = g.n_edges();
        Ok(Self {
            n_clusters: n,
            n_edges: e,
            avg_degree: e as f64 / n as f64,
            density: e as f64 / max_edges(n) as f64,
            max_total_degree: g.max_total_degree(),
            max_out_degree: g.out_degrees().into_iter().max().unwrap_or(0),
            max_in_degree: g.in_degrees().into_iter().max().unwrap_or(0),
        })
    }
}

/// Inclusive range edge weights are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightRange {
    pub lo: u32,
    pub hi: u32,
}

impl Default for WeightRange {
    fn default() -> Self {
        Self { lo: 1, hi: 16 }
    }
}

/// Synthetic graph with exactly `n_edges` distinct directed edges, sampled
/// uniformly without replacement, weights from the default range.
pub fn generate_synthetic(
    n_clusters: usize,
    n_edges: usize,
    seed: u64,
) -> Result<ClusterGraph, GraphError> {
    generate_synthetic_with(n_clusters, n_edges, seed, WeightRange::default())
}

pub fn generate_synthetic_with(
    n_clusters: usize,
    n_edges: usize,
    seed: u64,
    weights: WeightRange,
) -> Result<ClusterGraph, GraphError> {
    if n_clusters == 0 {
        return Err(GraphError::NoClusters);
    }
    if weights.lo > weights.hi {
        return Err(GraphError::BadWeightRange {
            lo: weights.lo,
            hi: weights.hi,
        });
    }
    let max = max_edges(n_clusters);
    if n_edges > max {
        return Err(GraphError::TooManyEdges {
            n: n_clusters,
            edges: n_edges,
            max,
        });
    }
    let mut rng = seed::rng(seed);
    // Pair k enumerates (src, dst) with dst != src: src = k / (n-1), and the
    // remainder skips the diagonal.
    let mut picks = index::sample(&mut rng, max, n_edges).into_vec();
    picks.sort_unstable();
    let edges = picks
        .into_iter()
        .map(|k| {
            let src = k / (n_clusters - 1);
            let r = k % (n_clusters - 1);
            let dst = if r >= src { r + 1 } else { r };
            Edge {
                src,
                dst,
                weight: rng.gen_range(weights.lo..=weights.hi),
            }
        })
        .collect();
    ClusterGraph::new(
        alloc::format!("synth_{}({})", n_clusters, n_edges),
        n_clusters,
        edges,
    )
}

/// Edge count for a target density, rounded to nearest.
pub fn edges_for_density(n_clusters: usize, density: f64) -> usize {
    let e = libm::round(density * max_edges(n_clusters) as f64);
    (e.max(0.0) as usize).min(max_edges(n_clusters))
}
