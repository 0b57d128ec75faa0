//! Maximum and maximal clique search on conflict graphs.

use alloc::vec;
use alloc::vec::Vec;

use super::ConflictGraph;
use crate::bitset::BitSet;

/// Search budget consulted during clique extraction. `start` is called at the
/// beginning of every clique search; once `exhausted` reports true the search
/// stops and returns the largest clique found so far.
pub trait CliqueBudget {
    fn start(&mut self) {}
    fn exhausted(&mut self) -> bool;
}

/// Never runs out.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unlimited;

impl CliqueBudget for Unlimited {
    fn exhausted(&mut self) -> bool {
        false
    }
}

/// Limits the number of search-tree nodes per clique search.
#[derive(Clone, Copy, Debug)]
pub struct NodeBudget {
    pub limit: u64,
    used: u64,
}

impl NodeBudget {
    pub fn new(limit: u64) -> Self {
        Self { limit, used: 0 }
    }
}

impl CliqueBudget for NodeBudget {
    fn start(&mut self) {
        self.used = 0;
    }

    fn exhausted(&mut self) -> bool {
        self.used += 1;
        self.used > self.limit
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueResult {
    /// Ascending vertex ids.
    pub vertices: Vec<usize>,
    /// False when the budget ran out before the search proved optimality.
    pub exact: bool,
}

/// Polled every this many search nodes.
const BUDGET_STRIDE: u64 = 64;

/// Dense relabeled copy of an induced subgraph.
struct Local {
    /// Local index -> original vertex.
    ids: Vec<usize>,
    adj: Vec<BitSet>,
}

impl Local {
    fn induced(g: &ConflictGraph, within: &BitSet, ids: Vec<usize>) -> Self {
        let mut pos = vec![usize::MAX; g.n()];
        for (i, &v) in ids.iter().enumerate() {
            pos[v] = i;
        }
        let k = ids.len();
        let adj = ids
            .iter()
            .map(|&v| {
                let mut row = BitSet::new(k);
                for u in g.neighbors(v).iter().filter(|&u| within.contains(u)) {
                    row.insert(pos[u]);
                }
                row
            })
            .collect();
        Self { ids, adj }
    }
}

/// Smallest-last (degeneracy) order of the vertices of `within`, reversed so
/// that the densest core comes first.
pub fn degeneracy_order(g: &ConflictGraph, within: &BitSet) -> Vec<usize> {
    let verts: Vec<usize> = within.iter().collect();
    let mut deg: Vec<usize> = vec![0; g.n()];
    for &v in &verts {
        deg[v] = g.neighbors(v).intersection_count(within);
    }
    let max_deg = verts.iter().map(|&v| deg[v]).max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_deg + 1];
    // Descending ids so that pops yield the lowest id first.
    for &v in verts.iter().rev() {
        buckets[deg[v]].push(v);
    }
    let mut alive = within.clone();
    let mut order = Vec::with_capacity(verts.len());
    let mut lo = 0;
    while order.len() < verts.len() {
        lo = lo.min(max_deg);
        while buckets[lo].is_empty() {
            lo += 1;
        }
        let v = buckets[lo].pop().expect("nonempty bucket");
        if !alive.contains(v) || deg[v] != lo {
            continue;
        }
        alive.remove(v);
        order.push(v);
        for u in g.neighbors(v).iter().filter(|&u| alive.contains(u)) {
            deg[u] -= 1;
            buckets[deg[u]].push(u);
            lo = lo.min(deg[u]);
        }
    }
    order.reverse();
    order
}

/// Greedy sequential coloring of `p` in index order. Returns vertices sorted
/// by color and the color (1-based) of each.
fn color_sort(adj: &[BitSet], p: &BitSet, verts: &mut Vec<usize>, colors: &mut Vec<usize>) {
    verts.clear();
    colors.clear();
    let mut uncolored = p.clone();
    let mut color = 0;
    while !uncolored.is_empty() {
        color += 1;
        let mut q = uncolored.clone();
        while let Some(v) = q.first() {
            q.remove(v);
            q.difference_with(&adj[v]);
            uncolored.remove(v);
            verts.push(v);
            colors.push(color);
        }
    }
}

fn color_bound(adj: &[BitSet], p: &BitSet) -> usize {
    let mut uncolored = p.clone();
    let mut color = 0;
    while !uncolored.is_empty() {
        color += 1;
        let mut q = uncolored.clone();
        while let Some(v) = q.first() {
            q.remove(v);
            q.difference_with(&adj[v]);
            uncolored.remove(v);
        }
    }
    color
}

struct Search<'a, B: CliqueBudget> {
    adj: &'a [BitSet],
    best: Vec<usize>,
    budget: &'a mut B,
    nodes: u64,
    stopped: bool,
}

impl<B: CliqueBudget> Search<'_, B> {
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if !self.stopped && (self.nodes - 1) % BUDGET_STRIDE == 0 && self.budget.exhausted() {
            self.stopped = true;
        }
        self.stopped
    }

    /// Colour-bounded branch and bound for the clique number.
    fn expand(&mut self, r: &mut Vec<usize>, mut p: BitSet) {
        if self.tick() {
            return;
        }
        let mut verts = Vec::new();
        let mut colors = Vec::new();
        color_sort(self.adj, &p, &mut verts, &mut colors);
        for k in (0..verts.len()).rev() {
            if r.len() + colors[k] <= self.best.len() || self.stopped {
                return;
            }
            let v = verts[k];
            r.push(v);
            let np = p.intersection(&self.adj[v]);
            if np.is_empty() {
                if r.len() > self.best.len() {
                    self.best = r.clone();
                }
            } else {
                self.expand(r, np);
            }
            r.pop();
            p.remove(v);
        }
    }

    /// Ascending-order search for the first clique of exactly `target`
    /// vertices; that clique is the lexicographically smallest one.
    fn first_of_size(&mut self, r: &mut Vec<usize>, p: BitSet, target: usize) -> bool {
        if r.len() == target {
            return true;
        }
        if self.tick() {
            return false;
        }
        if r.len() + p.count() < target || r.len() + color_bound(self.adj, &p) < target {
            return false;
        }
        let cands: Vec<usize> = p.iter().collect();
        for (i, &v) in cands.iter().enumerate() {
            if r.len() + (cands.len() - i) < target || self.stopped {
                return false;
            }
            let mut np = p.intersection(&self.adj[v]);
            np.clear_through(v);
            r.push(v);
            if self.first_of_size(r, np, target) {
                return true;
            }
            r.pop();
        }
        false
    }
}

/// Maximum-cardinality clique of the subgraph induced by `within`; among
/// maximum cliques the lexicographically smallest sorted vertex set.
///
/// Returns `None` when `within` is empty.
pub fn max_clique_within<B: CliqueBudget>(
    g: &ConflictGraph,
    within: &BitSet,
    budget: &mut B,
) -> Option<CliqueResult> {
    if within.is_empty() {
        return None;
    }
    budget.start();

    // Phase 1: clique number, vertices relabeled in degeneracy order.
    let order = degeneracy_order(g, within);
    let local = Local::induced(g, within, order);
    let k = local.ids.len();
    let mut seed: Vec<usize> = Vec::new();
    for start in 0..k.min(16) {
        let mut clique = vec![start];
        let mut cand = local.adj[start].clone();
        while let Some(v) = cand.first() {
            clique.push(v);
            cand.intersect_with(&local.adj[v]);
        }
        if clique.len() > seed.len() {
            seed = clique;
        }
    }
    let mut search = Search {
        adj: &local.adj,
        best: seed,
        budget,
        nodes: 0,
        stopped: false,
    };
    search.expand(&mut Vec::new(), BitSet::full(k));
    let omega = search.best.len();
    let phase1: Vec<usize> = {
        let mut v: Vec<usize> = search.best.iter().map(|&i| local.ids[i]).collect();
        v.sort_unstable();
        v
    };
    if search.stopped {
        return Some(CliqueResult {
            vertices: phase1,
            exact: false,
        });
    }

    // Phase 2: lexicographically smallest clique of size omega, in original
    // id order.
    let asc = Local::induced(g, within, within.iter().collect());
    let mut lex = Search {
        adj: &asc.adj,
        best: Vec::new(),
        budget: search.budget,
        nodes: search.nodes,
        stopped: false,
    };
    let mut r = Vec::new();
    if lex.first_of_size(&mut r, BitSet::full(asc.ids.len()), omega) {
        return Some(CliqueResult {
            vertices: r.iter().map(|&i| asc.ids[i]).collect(),
            exact: true,
        });
    }
    // Budget ran out in phase 2: the size is proven, the tie-break is not.
    Some(CliqueResult {
        vertices: phase1,
        exact: !lex.stopped,
    })
}

/// All maximal cliques of the graph (Bron-Kerbosch with Tomita pivoting and
/// a degeneracy-ordered outer loop). Each clique is sorted; the list is
/// sorted lexicographically. Exponential; meant for small graphs.
pub fn maximal_cliques(g: &ConflictGraph) -> Vec<Vec<usize>> {
    fn bk(g: &ConflictGraph, r: &mut Vec<usize>, mut p: BitSet, mut x: BitSet, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() {
            if x.is_empty() {
                let mut c = r.clone();
                c.sort_unstable();
                out.push(c);
            }
            return;
        }
        // Pivot: vertex of P u X with most neighbours in P.
        let mut px = p.clone();
        px.union_with(&x);
        let pivot = px
            .iter()
            .max_by_key(|&u| (g.neighbors(u).intersection_count(&p), usize::MAX - u))
            .expect("P nonempty");
        let mut cands = p.clone();
        cands.difference_with(g.neighbors(pivot));
        for v in cands.iter() {
            r.push(v);
            bk(
                g,
                r,
                p.intersection(g.neighbors(v)),
                x.intersection(g.neighbors(v)),
                out,
            );
            r.pop();
            p.remove(v);
            x.insert(v);
        }
    }

    let n = g.n();
    let mut out = Vec::new();
    let all = BitSet::full(n);
    let order = degeneracy_order(g, &all);
    let mut rank = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    // Outer loop in smallest-last order: P = later neighbours, X = earlier.
    for &v in order.iter().rev() {
        let mut p = BitSet::new(n);
        let mut x = BitSet::new(n);
        for u in g.neighbors(v).iter() {
            if rank[u] < rank[v] {
                p.insert(u);
            } else {
                x.insert(u);
            }
        }
        bk(g, &mut vec![v], p, x, &mut out);
    }
    out.sort();
    out
}
