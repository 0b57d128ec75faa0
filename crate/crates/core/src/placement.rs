//! Cluster-to-tile mapping.
//!
//! Cost of a placement is `sum(weight * (|column(src) - column(dst)| + 1))`:
//! lanes run horizontally, so traversed segments dominate, and the `+ 1`
//! charges the rung hop at the endpoints.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appgraph::ClusterGraph;
use crate::seed;
use crate::topology::LadderTopology;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlacementError {
    #[error("{clusters} clusters do not fit on {tiles} tiles")]
    TooManyClusters { clusters: usize, tiles: usize },
    #[error("placement covers {placed} clusters but the graph has {clusters}")]
    Unplaced { placed: usize, clusters: usize },
    #[error("cluster {cluster} placed on tile {tile}, outside the {n_tiles}-tile ladder")]
    TileOutOfRange {
        cluster: usize,
        tile: usize,
        n_tiles: usize,
    },
    #[error("tile {tile} holds more than one cluster")]
    SharedTile { tile: usize },
}

/// Injective map from cluster id to tile id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilePlacement {
    tile_of: Vec<usize>,
}

impl TilePlacement {
    pub fn new(tile_of: Vec<usize>, n_tiles: usize) -> Result<Self, PlacementError> {
        let mut used = vec![false; n_tiles];
        for (cluster, &tile) in tile_of.iter().enumerate() {
            if tile >= n_tiles {
                return Err(PlacementError::TileOutOfRange {
                    cluster,
                    tile,
                    n_tiles,
                });
            }
            if core::mem::replace(&mut used[tile], true) {
                return Err(PlacementError::SharedTile { tile });
            }
        }
        Ok(Self { tile_of })
    }

    pub fn tile_of(&self, cluster: usize) -> usize {
        self.tile_of[cluster]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.tile_of
    }

    pub fn len(&self) -> usize {
        self.tile_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tile_of.is_empty()
    }

    /// Checks the placement against a graph and topology.
    pub fn validate(&self, g: &ClusterGraph, topo: &LadderTopology) -> Result<(), PlacementError> {
        if self.tile_of.len() != g.n_clusters() {
            return Err(PlacementError::Unplaced {
                placed: self.tile_of.len(),
                clusters: g.n_clusters(),
            });
        }
        Self::new(self.tile_of.clone(), topo.n_tiles).map(|_| ())
    }
}

#[inline]
fn edge_cost(topo: &LadderTopology, a: usize, b: usize, weight: u32) -> u64 {
    let (ca, cb) = (topo.column_of(a), topo.column_of(b));
    weight as u64 * (ca.abs_diff(cb) as u64 + 1)
}

pub fn placement_cost(
    g: &ClusterGraph,
    topo: &LadderTopology,
    p: &TilePlacement,
) -> Result<u64, PlacementError> {
    p.validate(g, topo)?;
    Ok(g
        .edges()
        .iter()
        .map(|e| edge_cost(topo, p.tile_of(e.src), p.tile_of(e.dst), e.weight))
        .sum())
}

/// Undirected weighted adjacency, both edge directions merged.
fn neighbour_lists(g: &ClusterGraph) -> Vec<Vec<(usize, u32)>> {
    let mut adj = vec![Vec::new(); g.n_clusters()];
    for e in g.edges() {
        adj[e.src].push((e.dst, e.weight));
        adj[e.dst].push((e.src, e.weight));
    }
    adj
}

/// Constructive placement: clusters in descending total degree (ties to the
/// lower id), each onto the free tile with the smallest incremental cost
/// (ties to the lower tile id).
pub fn place_greedy(g: &ClusterGraph, topo: &LadderTopology) -> Result<TilePlacement, PlacementError> {
    let n = g.n_clusters();
    if n > topo.n_tiles {
        return Err(PlacementError::TooManyClusters {
            clusters: n,
            tiles: topo.n_tiles,
        });
    }
    let degree = g.total_degrees();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));

    let adj = neighbour_lists(g);
    let mut tile_of = vec![usize::MAX; n];
    let mut free = vec![true; topo.n_tiles];
    for &c in &order {
        let mut best: Option<(u64, usize)> = None;
        for t in (0..topo.n_tiles).filter(|&t| free[t]) {
            let inc: u64 = adj[c]
                .iter()
                .filter(|(o, _)| tile_of[*o] != usize::MAX)
                .map(|&(o, w)| edge_cost(topo, t, tile_of[o], w))
                .sum();
            if best.is_none_or(|(b, _)| inc < b) {
                best = Some((inc, t));
            }
        }
        let (_, t) = best.expect("free tile exists");
        tile_of[c] = t;
        free[t] = false;
    }
    Ok(TilePlacement { tile_of })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    /// Starting temperature; `None` uses a tenth of the initial cost.
    pub t0: Option<f64>,
    /// Geometric factor applied after every sweep of `n_clusters` moves.
    pub cooling: f64,
    /// Total proposed moves; `None` uses `200 * n_clusters`.
    pub iters: Option<usize>,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            t0: None,
            cooling: 0.97,
            iters: None,
        }
    }
}

/// Greedy placement refined by pairwise-swap simulated annealing. A move
/// swaps the contents of two tiles, either of which may be empty. The best
/// placement seen is returned, so the result never costs more than the
/// greedy start.
pub fn place_anneal(
    g: &ClusterGraph,
    topo: &LadderTopology,
    seed: u64,
    params: AnnealParams,
) -> Result<TilePlacement, PlacementError> {
    let start = place_greedy(g, topo)?;
    Ok(anneal_from(g, topo, start, seed, params))
}

pub fn anneal_from(
    g: &ClusterGraph,
    topo: &LadderTopology,
    start: TilePlacement,
    seed: u64,
    params: AnnealParams,
) -> TilePlacement {
    let n = g.n_clusters();
    let iters = params.iters.unwrap_or(200 * n);
    if iters == 0 || n == 0 || topo.n_tiles < 2 {
        return start;
    }
    let adj = neighbour_lists(g);
    let mut tile_of = start.tile_of.clone();
    let mut at_tile = vec![usize::MAX; topo.n_tiles];
    for (c, &t) in tile_of.iter().enumerate() {
        at_tile[t] = c;
    }

    // Cost of the edges touching `c` when placed on `t`, skipping `skip`.
    let local = |tile_of: &[usize], c: usize, t: usize, skip: usize| -> i64 {
        adj[c]
            .iter()
            .filter(|(o, _)| *o != skip)
            .map(|&(o, w)| edge_cost(topo, t, tile_of[o], w) as i64)
            .sum()
    };

    let initial: i64 = g
        .edges()
        .iter()
        .map(|e| edge_cost(topo, tile_of[e.src], tile_of[e.dst], e.weight) as i64)
        .sum();
    let mut cost = initial;
    let mut best_cost = initial;
    let mut best = tile_of.clone();
    let mut temp = params.t0.unwrap_or(initial as f64 / 10.0);
    let mut rng = seed::rng(seed);
    let sweep = n.max(1);

    for it in 0..iters {
        if it > 0 && it % sweep == 0 {
            temp *= params.cooling;
        }
        let ta = rng.gen_range(0..topo.n_tiles);
        let mut tb = rng.gen_range(0..topo.n_tiles - 1);
        if tb >= ta {
            tb += 1;
        }
        let (ca, cb) = (at_tile[ta], at_tile[tb]);
        if ca == usize::MAX && cb == usize::MAX {
            continue;
        }
        // Edges between ca and cb keep their column distance under a swap,
        // so they are excluded from both sides of the delta.
        let mut delta = 0i64;
        if ca != usize::MAX {
            delta += local(&tile_of, ca, tb, cb) - local(&tile_of, ca, ta, cb);
        }
        if cb != usize::MAX {
            delta += local(&tile_of, cb, ta, ca) - local(&tile_of, cb, tb, ca);
        }
        let accept = delta <= 0
            || (temp > 0.0 && rng.gen::<f64>() < libm::exp(-(delta as f64) / temp));
        if !accept {
            continue;
        }
        if ca != usize::MAX {
            tile_of[ca] = tb;
        }
        if cb != usize::MAX {
            tile_of[cb] = ta;
        }
        at_tile.swap(ta, tb);
        cost += delta;
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&tile_of);
        }
    }
    TilePlacement { tile_of: best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appgraph::{generate_synthetic, Edge};

    fn e(src: usize, dst: usize, weight: u32) -> Edge {
        Edge { src, dst, weight }
    }

    /// Exhaustive minimum over all injective maps of clusters onto tiles.
    fn brute_min(g: &ClusterGraph, topo: &LadderTopology) -> u64 {
        fn rec(
            g: &ClusterGraph,
            topo: &LadderTopology,
            c: usize,
            tile_of: &mut Vec<usize>,
            used: &mut Vec<bool>,
            best: &mut u64,
        ) {
            if c == g.n_clusters() {
                let cost = g
                    .edges()
                    .iter()
                    .map(|e| {
                        let d = (tile_of[e.src] / 2).abs_diff(tile_of[e.dst] / 2) as u64;
                        e.weight as u64 * (d + 1)
                    })
                    .sum();
                *best = (*best).min(cost);
                return;
            }
            for t in 0..topo.n_tiles {
                if !used[t] {
                    used[t] = true;
                    tile_of.push(t);
                    rec(g, topo, c + 1, tile_of, used, best);
                    tile_of.pop();
                    used[t] = false;
                }
            }
        }
        let mut best = u64::MAX;
        rec(
            g,
            topo,
            0,
            &mut Vec::new(),
            &mut vec![false; topo.n_tiles],
            &mut best,
        );
        best
    }

    #[test]
    fn cost_formula() {
        let g = ClusterGraph::new("one", 2, vec![e(0, 1, 5)]).unwrap();
        let topo = LadderTopology::build(10, None).unwrap();
        // tiles 4 and 8 sit in columns 2 and 4
        let p = TilePlacement::new(vec![4, 8], 10).unwrap();
        assert_eq!(placement_cost(&g, &topo, &p), Ok(15));

        let empty = ClusterGraph::new("none", 3, vec![]).unwrap();
        let p = place_greedy(&empty, &topo).unwrap();
        assert_eq!(placement_cost(&empty, &topo, &p), Ok(0));
    }

    #[test]
    fn cost_rejects_partial_placement() {
        let g = ClusterGraph::new("one", 3, vec![e(0, 2, 1)]).unwrap();
        let topo = LadderTopology::build(4, None).unwrap();
        let p = TilePlacement::new(vec![0, 1], 4).unwrap();
        assert!(matches!(
            placement_cost(&g, &topo, &p),
            Err(PlacementError::Unplaced { .. })
        ));
    }

    #[test]
    fn placement_invariants() {
        assert!(matches!(
            TilePlacement::new(vec![0, 0], 4),
            Err(PlacementError::SharedTile { tile: 0 })
        ));
        assert!(TilePlacement::new(vec![0, 4], 4).is_err());
    }

    #[test]
    fn single_cluster_goes_to_tile_zero() {
        let g = ClusterGraph::new("solo", 1, vec![]).unwrap();
        let topo = LadderTopology::build(4, None).unwrap();
        assert_eq!(place_greedy(&g, &topo).unwrap().as_slice(), &[0]);
    }

    #[test]
    fn chain_on_four_tiles() {
        let g = ClusterGraph::new("chain", 3, vec![e(0, 1, 1), e(1, 2, 1)]).unwrap();
        let topo = LadderTopology::build(4, None).unwrap();
        let p = place_greedy(&g, &topo).unwrap();
        let cost = placement_cost(&g, &topo, &p).unwrap();
        assert_eq!(brute_min(&g, &topo), 3);
        assert_eq!(cost, 3);
        // B (highest degree) is placed first, on tile 0.
        assert_eq!(p.tile_of(1), 0);
    }

    #[test]
    fn complete_three_graph_spans_two_columns() {
        let edges = vec![e(0, 1, 1), e(1, 0, 1), e(1, 2, 1), e(2, 1, 1), e(0, 2, 1), e(2, 0, 1)];
        let g = ClusterGraph::new("k3", 3, edges).unwrap();
        let topo = LadderTopology::build(8, None).unwrap();
        let p = place_greedy(&g, &topo).unwrap();
        let cols: alloc::collections::BTreeSet<usize> =
            p.as_slice().iter().map(|&t| t / 2).collect();
        assert!(cols.len() <= 2);
        assert_eq!(placement_cost(&g, &topo, &p).unwrap(), brute_min(&g, &topo));
    }

    #[test]
    fn too_many_clusters() {
        let g = ClusterGraph::new("big", 5, vec![]).unwrap();
        let topo = LadderTopology::build(4, None).unwrap();
        assert!(matches!(
            place_greedy(&g, &topo),
            Err(PlacementError::TooManyClusters { .. })
        ));
    }

    #[test]
    fn zero_iterations_is_greedy() {
        let g = generate_synthetic(10, 30, 3).unwrap();
        let topo = LadderTopology::build(10, None).unwrap();
        let params = AnnealParams {
            iters: Some(0),
            ..Default::default()
        };
        assert_eq!(
            place_anneal(&g, &topo, 1, params).unwrap(),
            place_greedy(&g, &topo).unwrap()
        );
    }

    #[test]
    fn anneal_matches_exhaustive_on_five() {
        let g = generate_synthetic(5, 9, 11).unwrap();
        let topo = LadderTopology::build(6, None).unwrap();
        let p = place_anneal(&g, &topo, 4, AnnealParams::default()).unwrap();
        assert_eq!(placement_cost(&g, &topo, &p).unwrap(), brute_min(&g, &topo));
    }

    #[test]
    fn anneal_finds_optimum_on_six_for_most_seeds() {
        let g = generate_synthetic(6, 12, 21).unwrap();
        let topo = LadderTopology::build(6, None).unwrap();
        let opt = brute_min(&g, &topo);
        let hits = (0..100)
            .filter(|&s| {
                let p = place_anneal(&g, &topo, s, AnnealParams::default()).unwrap();
                placement_cost(&g, &topo, &p).unwrap() == opt
            })
            .count();
        assert!(hits >= 90, "hits = {}", hits);
    }

    #[test]
    fn anneal_from_optimum_keeps_cost() {
        let g = ClusterGraph::new("pair", 2, vec![e(0, 1, 3)]).unwrap();
        let topo = LadderTopology::build(6, None).unwrap();
        let opt = TilePlacement::new(vec![0, 1], 6).unwrap();
        let out = anneal_from(&g, &topo, opt.clone(), 9, AnnealParams::default());
        assert_eq!(
            placement_cost(&g, &topo, &out).unwrap(),
            placement_cost(&g, &topo, &opt).unwrap()
        );
    }

    #[test]
    fn row_swap_symmetry() {
        let g = generate_synthetic(12, 40, 2).unwrap();
        let topo = LadderTopology::build(12, None).unwrap();
        let p = place_anneal(&g, &topo, 2, AnnealParams::default()).unwrap();
        let flipped: Vec<usize> = p.as_slice().iter().map(|&t| t ^ 1).collect();
        let q = TilePlacement::new(flipped, 12).unwrap();
        assert_eq!(placement_cost(&g, &topo, &p), placement_cost(&g, &topo, &q));
    }
}
