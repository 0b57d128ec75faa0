//! Exact minimum grouping (chromatic number of the conflict graph) for small
//! instances. Used as an oracle.

use alloc::vec;
use alloc::vec::Vec;

use super::ConflictGraph;

/// Optimal colouring as a list of vertex groups; empty for an empty graph.
pub fn chromatic_partition(g: &ConflictGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    if n == 0 {
        return Vec::new();
    }
    // Highest degree first shrinks the search tree.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));

    let mut k = 1;
    loop {
        let mut color = vec![usize::MAX; n];
        if try_color(g, &order, 0, k, 0, &mut color) {
            let mut groups = vec![Vec::new(); k];
            for (v, &c) in color.iter().enumerate() {
                groups[c].push(v);
            }
            groups.retain(|grp| !grp.is_empty());
            return groups;
        }
        k += 1;
    }
}

/// Backtracking k-colouring; a vertex may open at most one new colour,
/// which removes colour-permutation symmetry.
fn try_color(
    g: &ConflictGraph,
    order: &[usize],
    pos: usize,
    k: usize,
    used: usize,
    color: &mut [usize],
) -> bool {
    let Some(&v) = order.get(pos) else {
        return true;
    };
    for c in 0..k.min(used + 1) {
        if g.neighbors(v).iter().all(|u| color[u] != c) {
            color[v] = c;
            if try_color(g, order, pos + 1, k, used.max(c + 1), color) {
                return true;
            }
            color[v] = usize::MAX;
        }
    }
    false
}
