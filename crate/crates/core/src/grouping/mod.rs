//! Grouping of routed paths into non-intersecting switching scenarios.
//!
//! A scenario is a set of paths that can be driven simultaneously; grouping
//! is a colouring of the conflict graph whose vertices are paths and whose
//! edges mark intersecting pairs. Two grouping algorithms are provided:
//! first-fit in path order ([`group_greedy`]) and clique-seeded grouping
//! ([`group_max_clique`]), plus an exact oracle for small instances.

pub mod clique;
mod exact;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet;
use crate::routing::{check_paths, RoutedPath, RoutingError};
use crate::topology::{LadderTopology, SwitchState};

pub use clique::{
    degeneracy_order, max_clique_within, maximal_cliques, CliqueBudget, CliqueResult, NodeBudget,
    Unlimited,
};

/// Largest path count the exact oracle accepts.
pub const MAX_EXACT_PATHS: usize = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupingError {
    #[error("max clique of an empty graph")]
    EmptyGraph,
    #[error("{0} paths exceed the exact-oracle limit of {MAX_EXACT_PATHS}")]
    TooLarge(usize),
    #[error("path {path} is assigned {count} times")]
    NotAPartition { path: usize, count: usize },
    #[error("scenario {scenario} holds intersecting paths {a} and {b}")]
    Intersecting { scenario: usize, a: usize, b: usize },
    #[error("scenario {scenario} demands two states of switch {switch}")]
    SwitchConflict { scenario: usize, switch: usize },
    #[error("scenario refers to unknown path {0}")]
    UnknownPath(usize),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

/// Symmetric intersection relation over paths; vertex `i` is the path of
/// edge `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    adj: Vec<BitSet>,
    m: usize,
}

impl ConflictGraph {
    pub fn build(paths: &[RoutedPath]) -> Self {
        let n = paths.len();
        let mut adj = vec![BitSet::new(n); n];
        let mut m = 0;
        for i in 0..n {
            for j in i + 1..n {
                if paths[i].intersects(&paths[j]) {
                    adj[i].insert(j);
                    adj[j].insert(i);
                    m += 1;
                }
            }
        }
        Self { adj, m }
    }

    /// Graph from an explicit undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![BitSet::new(n); n];
        for &(a, b) in edges {
            if a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        let m = adj.iter().map(BitSet::count).sum::<usize>() / 2;
        Self { adj, m }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }
}

/// Maximum clique of the whole graph (lexicographically smallest among
/// maximum cliques).
pub fn max_clique(g: &ConflictGraph) -> Result<Vec<usize>, GroupingError> {
    max_clique_within(g, &BitSet::full(g.n()), &mut Unlimited)
        .map(|c| c.vertices)
        .ok_or(GroupingError::EmptyGraph)
}

/// Ordered partition of the paths with one full switch vector per scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSet {
    n_paths: usize,
    groups: Vec<Vec<usize>>,
    switches: Vec<Vec<SwitchState>>,
}

impl ScenarioSet {
    /// Sorts each group and derives the switch vectors. Fails if a switch is
    /// demanded in two different states within one scenario; the partition
    /// and intersection properties are checked by [`ScenarioSet::validate`].
    pub fn assemble(
        topo: &LadderTopology,
        paths: &[RoutedPath],
        mut groups: Vec<Vec<usize>>,
    ) -> Result<Self, GroupingError> {
        let mut switches = Vec::with_capacity(groups.len());
        for (scenario, group) in groups.iter_mut().enumerate() {
            group.sort_unstable();
            let mut vector = vec![SwitchState::Idle; topo.n_switches()];
            for &p in group.iter() {
                let path = paths.get(p).ok_or(GroupingError::UnknownPath(p))?;
                for (id, state) in path.switch_settings() {
                    let switch = topo.switch_index(id);
                    match vector[switch] {
                        SwitchState::Idle => vector[switch] = state,
                        s if s == state => {}
                        _ => return Err(GroupingError::SwitchConflict { scenario, switch }),
                    }
                }
            }
            switches.push(vector);
        }
        Ok(Self {
            n_paths: paths.len(),
            groups,
            switches,
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn switch_vectors(&self) -> &[Vec<SwitchState>] {
        &self.switches
    }

    /// Scenario index of every path.
    pub fn scenario_of(&self) -> Vec<usize> {
        let mut of = vec![usize::MAX; self.n_paths];
        for (s, g) in self.groups.iter().enumerate() {
            for &p in g {
                of[p] = s;
            }
        }
        of
    }

    /// Checks that the groups partition the paths and that no scenario holds
    /// two intersecting paths.
    pub fn validate(&self, paths: &[RoutedPath]) -> Result<(), GroupingError> {
        let mut count = vec![0usize; paths.len()];
        for g in &self.groups {
            for &p in g {
                *count.get_mut(p).ok_or(GroupingError::UnknownPath(p))? += 1;
            }
        }
        if let Some((path, &count)) = count.iter().enumerate().find(|(_, &c)| c != 1) {
            return Err(GroupingError::NotAPartition { path, count });
        }
        for (scenario, g) in self.groups.iter().enumerate() {
            for (i, &a) in g.iter().enumerate() {
                for &b in &g[i + 1..] {
                    if paths[a].intersects(&paths[b]) {
                        return Err(GroupingError::Intersecting { scenario, a, b });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Greedy,
    #[serde(rename = "maxclique")]
    MaxClique,
    Exact,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::MaxClique => "maxclique",
            Algorithm::Exact => "exact",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "maxclique" | "max-clique" => Ok(Algorithm::MaxClique),
            "exact" => Ok(Algorithm::Exact),
            _ => Err("expected one of: greedy, maxclique, exact"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingStats {
    pub algorithm: Algorithm,
    pub scenarios: usize,
    /// Clique searches run (max-clique grouping only).
    pub clique_calls: usize,
    /// Clique searches cut short by the budget.
    pub fallbacks: usize,
    /// Size of the first extracted clique, i.e. the clique number of the
    /// whole conflict graph when that search was exact.
    pub first_clique: usize,
}

impl GroupingStats {
    fn simple(algorithm: Algorithm, scenarios: usize) -> Self {
        Self {
            algorithm,
            scenarios,
            clique_calls: 0,
            fallbacks: 0,
            first_clique: 0,
        }
    }

    /// True when every clique search finished within budget.
    pub fn exact(&self) -> bool {
        self.fallbacks == 0
    }
}

/// Scenario membership tracked as bit sets for fast compatibility checks.
struct Builder<'g> {
    g: &'g ConflictGraph,
    members: Vec<BitSet>,
    /// Per path: scenarios already holding a neighbour.
    blocked: Vec<BitSet>,
    n_blocked: Vec<usize>,
}

impl<'g> Builder<'g> {
    fn new(g: &'g ConflictGraph) -> Self {
        Self {
            g,
            members: Vec::new(),
            blocked: vec![BitSet::new(g.n().max(1)); g.n()],
            n_blocked: vec![0; g.n()],
        }
    }

    /// Number of existing scenarios `v` could join.
    fn n_feasible(&self, v: usize) -> usize {
        self.members.len() - self.n_blocked[v]
    }

    fn first_feasible(&self, v: usize) -> Option<usize> {
        (0..self.members.len()).find(|&s| self.fits(v, s))
    }

    fn mark(&mut self, v: usize, s: usize) {
        for u in self.g.neighbors(v).iter() {
            if !self.blocked[u].contains(s) {
                self.blocked[u].insert(s);
                self.n_blocked[u] += 1;
            }
        }
    }

    fn fits(&self, v: usize, s: usize) -> bool {
        !self.blocked[v].contains(s)
    }

    fn add(&mut self, v: usize, s: usize) {
        self.members[s].insert(v);
        self.mark(v, s);
    }

    fn open(&mut self, v: usize) -> usize {
        let mut set = BitSet::new(self.g.n());
        set.insert(v);
        self.members.push(set);
        let s = self.members.len() - 1;
        self.mark(v, s);
        s
    }

    fn groups(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|s| s.iter().collect()).collect()
    }

    /// Puts every clique member into a distinct scenario, reusing existing
    /// scenarios through a maximum bipartite matching (augmenting paths,
    /// ascending order) and opening new ones for the unmatched members.
    fn place_clique(&mut self, clique: &[usize]) {
        let s = self.members.len();
        let mut owner: Vec<Option<usize>> = vec![None; s];
        let compat: Vec<Vec<usize>> = clique
            .iter()
            .map(|&v| (0..s).filter(|&j| self.fits(v, j)).collect())
            .collect();

        fn augment(
            i: usize,
            compat: &[Vec<usize>],
            owner: &mut [Option<usize>],
            seen: &mut [bool],
        ) -> bool {
            for &j in &compat[i] {
                if seen[j] {
                    continue;
                }
                seen[j] = true;
                if owner[j].is_none_or(|o| augment(o, compat, owner, seen)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
            false
        }

        let mut matched = vec![false; clique.len()];
        for i in 0..clique.len() {
            let mut seen = vec![false; s];
            matched[i] = augment(i, &compat, &mut owner, &mut seen);
        }
        for (j, o) in owner.iter().enumerate() {
            if let Some(i) = *o {
                self.add(clique[i], j);
            }
        }
        for (i, &v) in clique.iter().enumerate() {
            if !matched[i] {
                self.open(v);
            }
        }
    }
}

/// First-fit grouping in path order: each path joins the first scenario
/// holding no intersecting path, else opens a new scenario.
pub fn group_greedy(
    topo: &LadderTopology,
    paths: &[RoutedPath],
) -> Result<(ScenarioSet, GroupingStats), GroupingError> {
    check_paths(topo, paths)?;
    let g = ConflictGraph::build(paths);
    let mut b = Builder::new(&g);
    for v in 0..paths.len() {
        match b.first_feasible(v) {
            Some(s) => b.add(v, s),
            None => {
                b.open(v);
            }
        }
    }
    let set = ScenarioSet::assemble(topo, paths, b.groups())?;
    let stats = GroupingStats::simple(Algorithm::Greedy, set.len());
    Ok((set, stats))
}

/// Clique-seeded grouping.
///
/// Repeatedly extracts a maximum clique of the not-yet-grouped paths and
/// spreads its members over distinct scenarios. After each extraction the
/// remaining paths join existing scenarios, always taking next the path with
/// the fewest scenarios left open to it (ties: higher conflict degree, then
/// lower id) and placing it in the first one. A path that fits nowhere waits
/// for a later clique, which is the only point where new scenarios open.
pub fn group_max_clique<B: CliqueBudget>(
    topo: &LadderTopology,
    paths: &[RoutedPath],
    budget: &mut B,
) -> Result<(ScenarioSet, GroupingStats), GroupingError> {
    check_paths(topo, paths)?;
    let g = ConflictGraph::build(paths);
    let n = g.n();
    let mut b = Builder::new(&g);
    let mut remaining = BitSet::full(n);
    let mut stats = GroupingStats::simple(Algorithm::MaxClique, 0);
    while let Some(clique) = max_clique_within(&g, &remaining, budget) {
        stats.clique_calls += 1;
        if stats.clique_calls == 1 {
            stats.first_clique = clique.vertices.len();
        }
        if !clique.exact {
            stats.fallbacks += 1;
            log::warn!(
                "clique search {} hit its budget; using a clique of size {}",
                stats.clique_calls,
                clique.vertices.len()
            );
        }
        b.place_clique(&clique.vertices);
        for &v in &clique.vertices {
            remaining.remove(v);
        }
        // Fill existing scenarios, most constrained path first.
        loop {
            let pick = remaining
                .iter()
                .filter(|&v| b.n_feasible(v) > 0)
                .min_by(|&x, &y| {
                    b.n_feasible(x)
                        .cmp(&b.n_feasible(y))
                        .then(g.degree(y).cmp(&g.degree(x)))
                        .then(x.cmp(&y))
                });
            let Some(v) = pick else { break };
            if let Some(s) = b.first_feasible(v) {
                b.add(v, s);
            }
            remaining.remove(v);
        }
    }
    let set = ScenarioSet::assemble(topo, paths, b.groups())?;
    stats.scenarios = set.len();
    Ok((set, stats))
}

/// Minimum-size grouping by exhaustive colouring. Oracle only.
pub fn optimal_grouping_exact(
    topo: &LadderTopology,
    paths: &[RoutedPath],
) -> Result<(ScenarioSet, GroupingStats), GroupingError> {
    if paths.len() > MAX_EXACT_PATHS {
        return Err(GroupingError::TooLarge(paths.len()));
    }
    check_paths(topo, paths)?;
    let g = ConflictGraph::build(paths);
    let set = ScenarioSet::assemble(topo, paths, exact::chromatic_partition(&g))?;
    let stats = GroupingStats::simple(Algorithm::Exact, set.len());
    Ok((set, stats))
}

/// Chromatic number of an arbitrary conflict graph (small graphs only).
pub fn chromatic_number(g: &ConflictGraph) -> usize {
    exact::chromatic_partition(g).len()
}

pub fn group<B: CliqueBudget>(
    algorithm: Algorithm,
    topo: &LadderTopology,
    paths: &[RoutedPath],
    budget: &mut B,
) -> Result<(ScenarioSet, GroupingStats), GroupingError> {
    match algorithm {
        Algorithm::Greedy => group_greedy(topo, paths),
        Algorithm::MaxClique => group_max_clique(topo, paths, budget),
        Algorithm::Exact => optimal_grouping_exact(topo, paths),
    }
}
