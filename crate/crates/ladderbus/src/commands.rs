//! Stage commands over a run directory.
//!
//! Every stage reads its inputs from the directory, so running the stages
//! one by one produces the same files as `run`.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use ladderbus_core::controlgen::{
    build_schedule, compressed_bits, control_memory_bits, control_memory_bits_for,
    decode_programs, default_controllers, encode_scenarios, partition_regions,
};
use ladderbus_core::costmodel::{calibrate, fpga_observations, CostCoefficients};
use ladderbus_core::grouping::{
    group_greedy, group_max_clique, optimal_grouping_exact, Algorithm,
};
use ladderbus_core::pipeline::{place, topology_for, Stage};
use ladderbus_core::placement::placement_cost;
use ladderbus_core::routing::extract_paths;
use ladderbus_core::sim::Simulation;
use ladderbus_core::{ClusterGraph, ConflictGraph};
use thiserror::Error;

use crate::budget::Deadline;
use crate::config::Config;
use crate::graphfile::parse_cluster_graph;
use crate::state::{
    json, paths_text, placement_text, scenarios_text, CollisionRecord, CostDoc, GroupingDoc,
    RunDir, SimDoc, StateError, CONFIG_FILE, COST_FILE, GROUPING_FILE, PATHS_FILE,
    PLACEMENT_FILE, SCENARIOS_FILE, SIM_FILE, TOPOLOGY_FILE, TRACE_FILE,
};
use crate::trace::write_trace;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage}: {message}")]
    Stage { stage: String, message: String },
    #[error("{stage}: invariant violated: {message}")]
    Invariant { stage: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { .. } => 3,
            CliError::Invariant { .. } => 4,
        }
    }

    pub fn stage(stage: impl Display, e: impl Display) -> Self {
        CliError::Stage {
            stage: stage.to_string(),
            message: e.to_string(),
        }
    }

    pub fn invariant(stage: impl Display, e: impl Display) -> Self {
        CliError::Invariant {
            stage: stage.to_string(),
            message: e.to_string(),
        }
    }
}

/// Coefficients fitted to the published FPGA utilization table.
pub fn default_coefficients() -> CostCoefficients {
    calibrate(&fpga_observations()).expect("published table calibrates")
}

pub struct Runner {
    pub dir: RunDir,
    pub cfg: Config,
    coefficients: CostCoefficients,
}

impl Runner {
    pub fn new(dir: impl Into<PathBuf>, cfg: Config) -> Result<Self, CliError> {
        cfg.check().map_err(CliError::Config)?;
        let dir = RunDir::create(dir).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            dir,
            cfg,
            coefficients: default_coefficients(),
        })
    }

    /// Starts `stage`: checks that its predecessor is present, drops the
    /// files of `stage` and everything after it, and records the config.
    fn begin(&self, stage: Stage, needs: Option<Stage>) -> Result<(), CliError> {
        let err = |e: StateError| CliError::stage(stage, e);
        if let Some(prev) = needs {
            self.dir.require(prev).map_err(err)?;
        }
        self.dir.invalidate_from(stage).map_err(err)?;
        self.dir.write(CONFIG_FILE, &self.cfg.to_toml()).map_err(err)?;
        log::info!("stage {stage}");
        Ok(())
    }

    fn write(&self, stage: Stage, name: &str, text: &str) -> Result<(), CliError> {
        self.dir.write(name, text).map_err(|e| CliError::stage(stage, e))
    }

    pub fn gen(&self) -> Result<ClusterGraph, CliError> {
        self.begin(Stage::Gen, None)?;
        let g = match &self.cfg.graph.file {
            Some(path) => read_graph_file(path)?,
            None => self
                .cfg
                .synthetic_graph()
                .map_err(|e| CliError::stage(Stage::Gen, e))?,
        };
        self.dir.save_graph(&g).map_err(|e| CliError::stage(Stage::Gen, e))?;
        Ok(g)
    }

    /// Builds the topology and places the clusters.
    pub fn place(&self) -> Result<u64, CliError> {
        self.begin(Stage::Topology, Some(Stage::Gen))?;
        let e = |e: &dyn Display| CliError::stage(Stage::Place, e);
        let g = self.dir.load_graph().map_err(|x| e(&x))?;
        let flow = self.cfg.flow_config();
        let topo = topology_for(&g, &flow).map_err(|x| CliError::stage(Stage::Topology, x))?;
        self.write(Stage::Topology, TOPOLOGY_FILE, &json(&topo.summary()))?;
        let p = place(&g, &topo, &flow).map_err(|x| e(&x))?;
        let cost = placement_cost(&g, &topo, &p).map_err(|x| e(&x))?;
        self.write(Stage::Place, PLACEMENT_FILE, &placement_text(&p, topo.n_tiles, cost))?;
        Ok(cost)
    }

    pub fn route(&self) -> Result<usize, CliError> {
        self.begin(Stage::Route, Some(Stage::Place))?;
        let e = |x: &dyn Display| CliError::stage(Stage::Route, x);
        let g = self.dir.load_graph().map_err(|x| e(&x))?;
        let topo = self.dir.load_topology().map_err(|x| e(&x))?;
        let p = self.dir.load_placement(&g, &topo).map_err(|x| e(&x))?;
        let paths = extract_paths(&g, &topo, &p).map_err(|x| e(&x))?;
        self.write(Stage::Route, PATHS_FILE, &paths_text(&paths))?;
        Ok(paths.len())
    }

    /// Groups with the configured algorithm; greedy and max-clique counts
    /// are both recorded for comparison.
    pub fn group(&self) -> Result<GroupingDoc, CliError> {
        self.begin(Stage::Group, Some(Stage::Route))?;
        let e = |x: &dyn Display| CliError::stage(Stage::Group, x);
        let g = self.dir.load_graph().map_err(|x| e(&x))?;
        let topo = self.dir.load_topology().map_err(|x| e(&x))?;
        let paths = self.dir.load_paths().map_err(|x| e(&x))?;

        let (greedy, _) = group_greedy(&topo, &paths).map_err(|x| e(&x))?;
        let mut budget = Deadline::from_secs(self.cfg.flow.clique_budget_secs);
        let (mc, mc_stats) = group_max_clique(&topo, &paths, &mut budget).map_err(|x| e(&x))?;
        let algorithm = self.cfg.flow.algorithm;
        let set = match algorithm {
            Algorithm::Greedy => greedy.clone(),
            Algorithm::MaxClique => mc.clone(),
            Algorithm::Exact => optimal_grouping_exact(&topo, &paths).map_err(|x| e(&x))?.0,
        };
        set.validate(&paths)
            .map_err(|x| CliError::invariant(Stage::Group, x))?;
        let lower_bound = g.scenario_lower_bound();
        if set.len() < lower_bound {
            return Err(CliError::invariant(
                Stage::Group,
                format!("{} scenarios below the degree bound {lower_bound}", set.len()),
            ));
        }
        let cg = ConflictGraph::build(&paths);
        let doc = GroupingDoc {
            algorithm,
            scenarios: set.len(),
            paths: paths.len(),
            conflict_edges: cg.m(),
            max_conflict_degree: cg.max_degree(),
            lower_bound,
            clique_number: mc_stats.first_clique,
            clique_calls: mc_stats.clique_calls,
            fallbacks: mc_stats.fallbacks,
            scenarios_greedy: greedy.len(),
            scenarios_maxclique: mc.len(),
            raw_bits: control_memory_bits_for(&topo, set.len()),
            compressed_bits: compressed_bits(&topo, set.switch_vectors()),
        };
        self.write(
            Stage::Group,
            SCENARIOS_FILE,
            &scenarios_text(&set, algorithm, topo.n_switches()),
        )?;
        self.write(Stage::Group, GROUPING_FILE, &json(&doc))?;
        Ok(doc)
    }

    pub fn emit_ctrl(&self) -> Result<usize, CliError> {
        self.begin(Stage::EmitCtrl, Some(Stage::Group))?;
        let e = |x: &dyn Display| CliError::stage(Stage::EmitCtrl, x);
        let topo = self.dir.load_topology().map_err(|x| e(&x))?;
        let paths = self.dir.load_paths().map_err(|x| e(&x))?;
        let set = self.dir.load_scenarios(&topo, &paths).map_err(|x| e(&x))?;
        let n = self.cfg.flow.controllers.unwrap_or_else(|| default_controllers(&topo));
        let regions = partition_regions(&topo, n).map_err(|x| e(&x))?;
        let mut schedule = build_schedule(set.len(), None).map_err(|x| e(&x))?;
        if let Some(g) = self.cfg.flow.guard {
            schedule = schedule.with_guard(g.flag, g.scenario);
        }
        let programs = encode_scenarios(&topo, &set, &regions, &schedule).map_err(|x| e(&x))?;
        self.dir.save_programs(&programs).map_err(|x| e(&x))?;
        let back = self.dir.load_programs().map_err(|x| e(&x))?;
        let decoded = decode_programs(&topo, &back).map_err(|x| e(&x))?;
        if back != programs || decoded != set.switch_vectors() {
            return Err(CliError::invariant(
                Stage::EmitCtrl,
                "controller files do not decode to the scenario set",
            ));
        }
        Ok(programs.len())
    }

    pub fn sim(&self) -> Result<SimDoc, CliError> {
        self.begin(Stage::Sim, Some(Stage::EmitCtrl))?;
        let e = |x: &dyn Display| CliError::stage(Stage::Sim, x);
        let topo = self.dir.load_topology().map_err(|x| e(&x))?;
        let paths = self.dir.load_paths().map_err(|x| e(&x))?;
        let set = self.dir.load_scenarios(&topo, &paths).map_err(|x| e(&x))?;
        let programs = self.dir.load_programs().map_err(|x| e(&x))?;
        let sim = Simulation::new(&topo, &programs, &paths, set.groups())
            .map_err(|x| e(&x))?
            .with_events(self.cfg.flow.events.clone())
            .with_trace(self.cfg.flow.trace);
        let frames = self.cfg.flow.frames;
        let (report, trace) = sim.run(frames);
        let undelivered: Vec<usize> = report
            .delivered
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d < frames as u64)
            .map(|(p, _)| p)
            .collect();
        let doc = SimDoc {
            steps: report.steps,
            frames,
            frame_latency: report.frame_latency,
            deliveries: report.delivered.iter().sum(),
            clean: report.is_clean() && undelivered.is_empty(),
            undelivered,
            collisions: report
                .collisions
                .iter()
                .map(|c| CollisionRecord {
                    step: c.step,
                    resource: c.resource.to_string(),
                    drivers: c.drivers,
                })
                .collect(),
            misroutes: report.misroutes,
            energy: report.energy,
        };
        self.write(Stage::Sim, SIM_FILE, &json(&doc))?;
        if self.cfg.flow.trace {
            self.write(Stage::Sim, TRACE_FILE, &write_trace(&trace))?;
        }
        if !doc.clean {
            return Err(CliError::invariant(
                Stage::Sim,
                format!(
                    "{} collisions, {} misroutes, {} paths short of {frames} deliveries",
                    doc.collisions.len(),
                    doc.misroutes,
                    doc.undelivered.len()
                ),
            ));
        }
        if doc.frame_latency != set.len() {
            return Err(CliError::invariant(
                Stage::Sim,
                format!("frame of {} steps for {} scenarios", doc.frame_latency, set.len()),
            ));
        }
        Ok(doc)
    }

    pub fn cost(&self) -> Result<CostDoc, CliError> {
        self.begin(Stage::Cost, Some(Stage::Sim))?;
        let e = |x: &dyn Display| CliError::stage(Stage::Cost, x);
        let topo = self.dir.load_topology().map_err(|x| e(&x))?;
        let paths = self.dir.load_paths().map_err(|x| e(&x))?;
        let set = self.dir.load_scenarios(&topo, &paths).map_err(|x| e(&x))?;
        let programs = self.dir.load_programs().map_err(|x| e(&x))?;
        let bits = control_memory_bits(&programs);
        let r = self.coefficients.report(&topo, bits, programs.len());
        let doc = CostDoc {
            n_controllers: programs.len(),
            ctrl_bits: bits,
            compressed_bits: compressed_bits(&topo, set.switch_vectors()),
            data_plane_units: r.data_plane_units,
            control_plane_units: r.control_plane_units,
            control_fraction: r.control_fraction,
            coefficients: r.coefficients,
        };
        self.write(Stage::Cost, COST_FILE, &json(&doc))?;
        Ok(doc)
    }

    /// All stages in order; files of completed stages stay on failure.
    pub fn run_all(&self) -> Result<(), CliError> {
        self.gen()?;
        self.place()?;
        self.route()?;
        self.group()?;
        self.emit_ctrl()?;
        self.sim()?;
        self.cost()?;
        Ok(())
    }
}

pub fn read_graph_file(path: &Path) -> Result<ClusterGraph, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::stage(Stage::Gen, format!("{}: {e}", path.display())))?;
    parse_cluster_graph(&text)
        .map_err(|e| CliError::stage(Stage::Gen, format!("{}: {e}", path.display())))
}
