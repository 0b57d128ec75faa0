//! The full flow for one application: topology, placement, routing,
//! grouping, controller compilation, simulation and cost.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appgraph::{edges_for_density, generate_synthetic, ClusterGraph, GraphError};
use crate::controlgen::{
    build_schedule, control_memory_bits, default_controllers, encode_scenarios,
    partition_regions, ControlError, ControllerProgram,
};
use crate::costmodel::{CostCoefficients, CostReport};
use crate::grouping::{group, Algorithm, CliqueBudget, GroupingError, GroupingStats, ScenarioSet};
use crate::placement::{place_anneal, AnnealParams, PlacementError, TilePlacement};
use crate::routing::{extract_paths, RoutedPath, RoutingError};
use crate::seed::{self, Stream};
use crate::sim::{run_frames, SimError, SimReport};
use crate::topology::{LadderTopology, TopologyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Gen,
    Topology,
    Place,
    Route,
    Group,
    EmitCtrl,
    Sim,
    Cost,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Gen,
        Stage::Topology,
        Stage::Place,
        Stage::Route,
        Stage::Group,
        Stage::EmitCtrl,
        Stage::Sim,
        Stage::Cost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::Topology => "topology",
            Stage::Place => "place",
            Stage::Route => "route",
            Stage::Group => "group",
            Stage::EmitCtrl => "emit-ctrl",
            Stage::Sim => "sim",
            Stage::Cost => "cost",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("gen: {0}")]
    Graph(#[from] GraphError),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("place: {0}")]
    Place(#[from] PlacementError),
    #[error("route: {0}")]
    Route(#[from] RoutingError),
    #[error("group: {0}")]
    Group(#[from] GroupingError),
    #[error("emit-ctrl: {0}")]
    Control(#[from] ControlError),
    #[error("sim: {0}")]
    Sim(#[from] SimError),
}

impl FlowError {
    pub fn stage(&self) -> Stage {
        match self {
            FlowError::Graph(_) => Stage::Gen,
            FlowError::Topology(_) => Stage::Topology,
            FlowError::Place(_) => Stage::Place,
            FlowError::Route(_) => Stage::Route,
            FlowError::Group(_) => Stage::Group,
            FlowError::Control(_) => Stage::EmitCtrl,
            FlowError::Sim(_) => Stage::Sim,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub algorithm: Algorithm,
    /// Lane count; `None` uses the square-root rule.
    pub n_lanes: Option<usize>,
    /// Tile count; `None` uses one tile per cluster (at least two).
    pub n_tiles: Option<usize>,
    /// Controller count; `None` uses `round(sqrt(columns))`.
    pub n_controllers: Option<usize>,
    pub anneal: AnnealParams,
    /// Root seed; the placement stream is derived from it.
    pub seed: u64,
    pub frames: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::MaxClique,
            n_lanes: None,
            n_tiles: None,
            n_controllers: None,
            anneal: AnnealParams::default(),
            seed: 1,
            frames: 1,
        }
    }
}

pub fn topology_for(g: &ClusterGraph, cfg: &FlowConfig) -> Result<LadderTopology, TopologyError> {
    LadderTopology::build(cfg.n_tiles.unwrap_or(g.n_clusters().max(2)), cfg.n_lanes)
}

pub fn place(
    g: &ClusterGraph,
    topo: &LadderTopology,
    cfg: &FlowConfig,
) -> Result<TilePlacement, PlacementError> {
    place_anneal(g, topo, seed::derive(cfg.seed, Stream::Anneal), cfg.anneal)
}

pub fn emit_ctrl(
    topo: &LadderTopology,
    set: &ScenarioSet,
    cfg: &FlowConfig,
) -> Result<Vec<ControllerProgram>, ControlError> {
    let n = cfg.n_controllers.unwrap_or_else(|| default_controllers(topo));
    let regions = partition_regions(topo, n)?;
    let schedule = build_schedule(set.len(), None)?;
    encode_scenarios(topo, set, &regions, &schedule)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowOutput {
    pub topology: LadderTopology,
    pub placement: TilePlacement,
    pub paths: Vec<RoutedPath>,
    pub scenarios: ScenarioSet,
    pub stats: GroupingStats,
    pub programs: Vec<ControllerProgram>,
    pub sim: SimReport,
    pub cost: CostReport,
}

/// Runs every stage after graph construction.
pub fn run_flow<B: CliqueBudget>(
    g: &ClusterGraph,
    cfg: &FlowConfig,
    coefficients: &CostCoefficients,
    budget: &mut B,
) -> Result<FlowOutput, FlowError> {
    let topology = topology_for(g, cfg)?;
    let placement = place(g, &topology, cfg)?;
    let paths = extract_paths(g, &topology, &placement)?;
    let (scenarios, stats) = group(cfg.algorithm, &topology, &paths, budget)?;
    let programs = emit_ctrl(&topology, &scenarios, cfg)?;
    let sim = run_frames(&topology, &programs, &paths, scenarios.groups(), cfg.frames)?;
    let cost = coefficients.report(&topology, control_memory_bits(&programs), programs.len());
    Ok(FlowOutput {
        topology,
        placement,
        paths,
        scenarios,
        stats,
        programs,
        sim,
        cost,
    })
}

/// One row of a scaling sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub density: f64,
    pub seed: u64,
    pub algo: Algorithm,
    #[serde(rename = "E")]
    pub e: usize,
    pub scenarios: usize,
    pub lower_bound: usize,
    pub ctrl_bits: usize,
    pub ctrl_frac: f64,
    /// Clique searches that hit the budget (not part of the CSV table).
    #[serde(default)]
    pub fallbacks: usize,
}

/// Header of the sweep table.
pub const SWEEP_HEADER: &str = "n,density,seed,algo,E,scenarios,lower_bound,ctrl_bits,ctrl_frac";

/// Synthetic instance for a sweep cell: `round(density * n (n - 1))` edges,
/// graph stream derived from `seed`.
pub fn sweep_graph(n: usize, density: f64, seed: u64) -> Result<ClusterGraph, GraphError> {
    generate_synthetic(
        n,
        edges_for_density(n, density),
        seed::derive(seed, Stream::Graph),
    )
}

/// Generates, maps, routes and groups one instance and reports its control
/// cost. The simulator is not run.
pub fn sweep_instance<B: CliqueBudget>(
    n: usize,
    density: f64,
    seed: u64,
    algo: Algorithm,
    coefficients: &CostCoefficients,
    budget: &mut B,
) -> Result<SweepRow, FlowError> {
    let g = sweep_graph(n, density, seed)?;
    let cfg = FlowConfig {
        algorithm: algo,
        seed,
        ..FlowConfig::default()
    };
    let topo = topology_for(&g, &cfg)?;
    let placement = place(&g, &topo, &cfg)?;
    let paths = extract_paths(&g, &topo, &placement)?;
    let (set, stats) = group(algo, &topo, &paths, budget)?;
    let programs = emit_ctrl(&topo, &set, &cfg)?;
    let ctrl_bits = control_memory_bits(&programs);
    let cost = coefficients.report(&topo, ctrl_bits, programs.len());
    Ok(SweepRow {
        n,
        density,
        seed,
        algo,
        e: g.n_edges(),
        scenarios: set.len(),
        lower_bound: g.scenario_lower_bound(),
        ctrl_bits,
        ctrl_frac: cost.control_fraction,
        fallbacks: stats.fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{calibrate, fpga_observations};
    use crate::grouping::Unlimited;

    #[test]
    fn flow_on_synth_40() {
        let g = generate_synthetic(40, 160, 1).unwrap();
        let k = calibrate(&fpga_observations()).unwrap();
        let out = run_flow(&g, &FlowConfig { frames: 2, ..Default::default() }, &k, &mut Unlimited).unwrap();
        assert_eq!(out.paths.len(), 160);
        assert!(out.scenarios.len() >= g.scenario_lower_bound());
        assert!(out.sim.is_clean());
        assert!(out.sim.delivered.iter().all(|&d| d == 2));
        assert!(out.cost.control_fraction > 0.0 && out.cost.control_fraction < 1.0);
    }

    #[test]
    fn empty_graph_flow() {
        let g = ClusterGraph::new("empty", 6, Vec::new()).unwrap();
        let k = calibrate(&fpga_observations()).unwrap();
        let out = run_flow(&g, &FlowConfig::default(), &k, &mut Unlimited).unwrap();
        assert!(out.scenarios.is_empty());
        assert!(out.sim.is_clean());
        assert_eq!(out.sim.steps, 0);
    }

    #[test]
    fn zero_density_row() {
        let k = calibrate(&fpga_observations()).unwrap();
        let row = sweep_instance(20, 0.0, 1, Algorithm::Greedy, &k, &mut Unlimited).unwrap();
        assert_eq!((row.e, row.scenarios, row.ctrl_bits), (0, 0, 0));
    }

    #[test]
    fn complete_graph_row() {
        let k = calibrate(&fpga_observations()).unwrap();
        let row = sweep_instance(5, 1.0, 3, Algorithm::MaxClique, &k, &mut Unlimited).unwrap();
        assert_eq!(row.e, 20);
        assert_eq!(row.lower_bound, 8);
        assert!(row.scenarios >= row.lower_bound);
    }

    #[test]
    fn flow_error_stage() {
        let g = ClusterGraph::new("big", 9, Vec::new()).unwrap();
        let cfg = FlowConfig {
            n_tiles: Some(4),
            ..Default::default()
        };
        let k = calibrate(&fpga_observations()).unwrap();
        let err = run_flow(&g, &cfg, &k, &mut Unlimited).unwrap_err();
        assert_eq!(err.stage(), Stage::Place);
    }
}
