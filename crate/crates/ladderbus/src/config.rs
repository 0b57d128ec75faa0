//! Run configuration: one TOML document, every field optional.
//!
//! ```toml
//! seed = 1
//!
//! [graph]
//! n = 40
//! edges = 160          # or: density = 0.1, or: file = "app.json"
//!
//! [flow]
//! algorithm = "maxclique"
//! frames = 2
//! clique_budget_secs = 10.0
//! guard = { flag = 1, scenario = 0 }
//! events = [{ step = 3, flag = 1 }]
//!
//! [anneal]
//! cooling = 0.97
//!
//! [sweep]
//! sizes = [20, 40, 60, 80, 96]
//! densities = [0.15]
//! seeds = [1, 2, 3]
//! algorithms = ["greedy", "maxclique"]
//! workers = 4
//! ```

use std::path::PathBuf;

use ladderbus_core::appgraph::{generate_synthetic_with, WeightRange};
use ladderbus_core::grouping::Algorithm;
use ladderbus_core::pipeline::FlowConfig;
use ladderbus_core::sim::FlagEvent;
use ladderbus_core::{seed, AnnealParams, ClusterGraph, GraphError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Root seed; every random stream is derived from it.
    pub seed: u64,
    pub graph: GraphConfig,
    pub flow: FlowSection,
    pub anneal: AnnealSection,
    pub sweep: SweepSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            graph: GraphConfig::default(),
            flow: FlowSection::default(),
            anneal: AnnealSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    /// Cluster-graph document; overrides the synthetic parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    pub weight_lo: u32,
    pub weight_hi: u32,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            file: None,
            n: 40,
            edges: None,
            density: None,
            weight_lo: WeightRange::default().lo,
            weight_hi: WeightRange::default().hi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardConfig {
    pub flag: u32,
    pub scenario: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lanes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tiles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controllers: Option<usize>,
    pub frames: usize,
    pub clique_budget_secs: f64,
    pub trace: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guard: Option<GuardConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<FlagEvent>,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::MaxClique,
            lanes: None,
            tiles: None,
            controllers: None,
            frames: 1,
            clique_budget_secs: 10.0,
            trace: false,
            guard: None,
            events: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub cooling: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
}

impl Default for AnnealSection {
    fn default() -> Self {
        let p = AnnealParams::default();
        Self {
            t0: p.t0,
            cooling: p.cooling,
            iters: p.iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub sizes: Vec<usize>,
    pub densities: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            sizes: vec![20, 40, 60, 80, 96],
            densities: vec![0.15],
            seeds: vec![1, 2, 3, 4, 5],
            algorithms: vec![Algorithm::Greedy, Algorithm::MaxClique],
            workers: 0,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), String> {
        let g = &self.graph;
        if g.edges.is_some() && g.density.is_some() {
            return Err("graph: give either `edges` or `density`, not both".into());
        }
        if let Some(d) = g.density {
            if !(0.0..=1.0).contains(&d) {
                return Err(format!("graph: density {d} outside [0, 1]"));
            }
        }
        if g.weight_lo == 0 || g.weight_lo > g.weight_hi {
            return Err(format!(
                "graph: weight range {}..={} must be non-empty and positive",
                g.weight_lo, g.weight_hi
            ));
        }
        let f = &self.flow;
        if f.frames == 0 {
            return Err("flow: frames must be at least 1".into());
        }
        if !(f.clique_budget_secs.is_finite() && f.clique_budget_secs > 0.0) {
            return Err("flow: clique_budget_secs must be positive".into());
        }
        if f.lanes == Some(0) || f.controllers == Some(0) {
            return Err("flow: lanes and controllers must be positive".into());
        }
        if !(self.anneal.cooling > 0.0 && self.anneal.cooling < 1.0) {
            return Err("anneal: cooling must lie in (0, 1)".into());
        }
        if let Some(d) = self.sweep.densities.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(format!("sweep: density {d} outside [0, 1]"));
        }
        Ok(())
    }

    pub fn anneal_params(&self) -> AnnealParams {
        AnnealParams {
            t0: self.anneal.t0,
            cooling: self.anneal.cooling,
            iters: self.anneal.iters,
        }
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            algorithm: self.flow.algorithm,
            n_lanes: self.flow.lanes,
            n_tiles: self.flow.tiles,
            n_controllers: self.flow.controllers,
            anneal: self.anneal_params(),
            seed: self.seed,
            frames: self.flow.frames,
        }
    }

    /// Edge count of the synthetic instance: `edges`, else `density`, else
    /// four per cluster.
    pub fn synthetic_edges(&self) -> usize {
        let n = self.graph.n;
        match (self.graph.edges, self.graph.density) {
            (Some(e), _) => e,
            (None, Some(d)) => ladderbus_core::appgraph::edges_for_density(n, d),
            (None, None) => 4 * n,
        }
    }

    pub fn synthetic_graph(&self) -> Result<ClusterGraph, GraphError> {
        generate_synthetic_with(
            self.graph.n,
            self.synthetic_edges(),
            seed::derive(self.seed, seed::Stream::Graph),
            WeightRange {
                lo: self.graph.weight_lo,
                hi: self.graph.weight_hi,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = r#"
seed = 1

[graph]
n = 40
edges = 160

[flow]
algorithm = "maxclique"
frames = 2
clique_budget_secs = 10.0
guard = { flag = 1, scenario = 0 }
events = [{ step = 3, flag = 1 }]

[anneal]
cooling = 0.97

[sweep]
sizes = [20, 40, 60, 80, 96]
densities = [0.15]
seeds = [1, 2, 3]
algorithms = ["greedy", "maxclique"]
workers = 4
"#;
        let cfg = Config::from_toml(text).unwrap();
        assert_eq!(cfg.synthetic_edges(), 160);
        assert_eq!(cfg.flow.events, vec![FlagEvent { step: 3, flag: 1 }]);
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::from_toml("sed = 1").is_err());
        assert!(Config::from_toml("[flow]\nalgo = \"greedy\"").is_err());
        assert!(Config::from_toml("[flow]\nalgorithm = \"fastest\"").is_err());
        assert!(Config::from_toml("[graph]\nedges = 3\ndensity = 0.1").is_err());
        assert!(Config::from_toml("[flow]\nframes = 0").is_err());
        assert!(Config::from_toml("[anneal]\ncooling = 1.5").is_err());
    }

    #[test]
    fn synthetic_graph_matches_core_generator() {
        let cfg = Config::from_toml("seed = 9\n[graph]\nn = 40\nedges = 160").unwrap();
        let g = cfg.synthetic_graph().unwrap();
        assert_eq!(g, ladderbus_core::pipeline::sweep_graph(40, 160.0 / 1560.0, 9).unwrap());
    }
}
