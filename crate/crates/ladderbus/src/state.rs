//! Run directories: one document per pipeline stage.
//!
//! | stage       | files                              |
//! |-------------|------------------------------------|
//! | `gen`       | `graph.json`                       |
//! | `topology`  | `topology.json`                    |
//! | `place`     | `placement.json`                   |
//! | `route`     | `paths.json`                       |
//! | `group`     | `scenarios.json`, `grouping.json`  |
//! | `emit-ctrl` | `controllers/ctrl_<id>.txt`        |
//! | `sim`       | `sim.json`, `trace.log` (optional) |
//! | `cost`      | `cost.json`                        |
//!
//! The stages present always form a prefix of this order: writing a stage
//! removes every later stage's files. `config.toml` holds the configuration
//! the directory was produced with.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ladderbus_core::controlgen::{expand_runs, run_lengths};
use ladderbus_core::costmodel::CostCoefficients;
use ladderbus_core::grouping::Algorithm;
use ladderbus_core::pipeline::Stage;
use ladderbus_core::topology::TopologySummary;
use ladderbus_core::{
    ClusterGraph, ControllerProgram, LadderTopology, RoutedPath, ScenarioSet, SwitchState,
    TilePlacement,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctrlfile::{parse_program, write_program};
use crate::graphfile::{parse_cluster_graph, write_cluster_graph};

pub const CONFIG_FILE: &str = "config.toml";
pub const GRAPH_FILE: &str = "graph.json";
pub const TOPOLOGY_FILE: &str = "topology.json";
pub const PLACEMENT_FILE: &str = "placement.json";
pub const PATHS_FILE: &str = "paths.json";
pub const SCENARIOS_FILE: &str = "scenarios.json";
pub const GROUPING_FILE: &str = "grouping.json";
pub const CONTROLLERS_DIR: &str = "controllers";
pub const SIM_FILE: &str = "sim.json";
pub const TRACE_FILE: &str = "trace.log";
pub const COST_FILE: &str = "cost.json";

/// Files owned by a stage; the first one marks the stage as present.
pub fn stage_files(stage: Stage) -> &'static [&'static str] {
    match stage {
        Stage::Gen => &[GRAPH_FILE],
        Stage::Topology => &[TOPOLOGY_FILE],
        Stage::Place => &[PLACEMENT_FILE],
        Stage::Route => &[PATHS_FILE],
        Stage::Group => &[SCENARIOS_FILE, GROUPING_FILE],
        Stage::EmitCtrl => &[CONTROLLERS_DIR],
        Stage::Sim => &[SIM_FILE, TRACE_FILE],
        Stage::Cost => &[COST_FILE],
    }
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("{file}: {message}")]
    Document { file: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stage `{missing}` is absent but later stage `{present}` is present")]
    Gap { missing: Stage, present: Stage },
    #[error("stage `{0}` has not been run in this directory")]
    Missing(Stage),
}

fn doc_err(file: &str, message: impl ToString) -> StateError {
    StateError::Document {
        file: file.to_string(),
        message: message.to_string(),
    }
}

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, StateError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| StateError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn open(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.path(stage_files(stage)[0]).exists()
    }

    /// Stages present, checked to form a prefix of the pipeline order.
    pub fn present_stages(&self) -> Result<Vec<Stage>, StateError> {
        let present: Vec<Stage> = Stage::ALL.into_iter().filter(|&s| self.has(s)).collect();
        for (i, &s) in present.iter().enumerate() {
            if s != Stage::ALL[i] {
                return Err(StateError::Gap {
                    missing: Stage::ALL[i],
                    present: s,
                });
            }
        }
        Ok(present)
    }

    pub fn require(&self, stage: Stage) -> Result<(), StateError> {
        self.present_stages()?;
        if self.has(stage) {
            Ok(())
        } else {
            Err(StateError::Missing(stage))
        }
    }

    /// Removes the files of `stage` and of every later stage.
    pub fn invalidate_from(&self, stage: Stage) -> Result<(), StateError> {
        for &s in Stage::ALL.iter().filter(|&&s| s >= stage) {
            for name in stage_files(s) {
                let p = self.path(name);
                let res = if p.is_dir() {
                    fs::remove_dir_all(&p)
                } else if p.exists() {
                    fs::remove_file(&p)
                } else {
                    Ok(())
                };
                res.map_err(|source| StateError::Io { path: p, source })?;
            }
        }
        Ok(())
    }

    pub fn write(&self, name: &str, text: &str) -> Result<(), StateError> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|source| StateError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        let tmp = p.with_extension("tmp");
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, &p))
            .map_err(|source| StateError::Io { path: p, source })
    }

    pub fn read(&self, name: &str) -> Result<String, StateError> {
        let p = self.path(name);
        fs::read_to_string(&p).map_err(|source| StateError::Io { path: p, source })
    }

    fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T, StateError> {
        serde_json::from_str(&self.read(name)?).map_err(|e| doc_err(name, e))
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("state documents serialize");
    s.push('\n');
    s
}

/// A JSON object whose last field is an array written one element per line.
fn record_doc<T: Serialize>(head: &[(&str, String)], key: &str, records: &[T]) -> String {
    let mut out = String::from("{\n");
    for (k, v) in head {
        writeln!(out, "  \"{k}\": {v},").unwrap();
    }
    if records.is_empty() {
        writeln!(out, "  \"{key}\": []").unwrap();
    } else {
        writeln!(out, "  \"{key}\": [").unwrap();
        for (i, r) in records.iter().enumerate() {
            let sep = if i + 1 < records.len() { "," } else { "" };
            let line = serde_json::to_string(r).expect("records serialize");
            writeln!(out, "    {line}{sep}").unwrap();
        }
        writeln!(out, "  ]").unwrap();
    }
    out.push_str("}\n");
    out
}

// ---- run-length switch vectors ----

/// `0*12 3 1*2 2 0*40`: runs of switch-state codes, `code*len` or `code`
/// for a single switch.
pub fn rle_string(states: &[SwitchState]) -> String {
    run_lengths(states)
        .iter()
        .map(|&(s, n)| {
            if n == 1 {
                s.code().to_string()
            } else {
                format!("{}*{n}", s.code())
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_rle(text: &str) -> Option<Vec<SwitchState>> {
    let runs = text
        .split_whitespace()
        .map(|tok| {
            let (code, n) = match tok.split_once('*') {
                Some((c, n)) => (c, n.parse::<usize>().ok().filter(|&n| n > 0)?),
                None => (tok, 1),
            };
            Some((SwitchState::from_code(code.parse().ok()?)?, n))
        })
        .collect::<Option<Vec<_>>>()?;
    Some(expand_runs(&runs))
}

// ---- documents ----

pub fn topology_from_summary(s: &TopologySummary) -> Result<LadderTopology, String> {
    let t = LadderTopology::build(s.tiles, Some(s.lanes))
        .map_err(|e| e.to_string())?
        .with_lane_width(s.lane_width_bits);
    if t.summary() != *s {
        return Err("resource counts do not match tiles and lanes".into());
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRecord {
    pub cluster: usize,
    pub tile: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementDoc {
    n_tiles: usize,
    #[allow(dead_code)]
    cost: u64,
    placement: Vec<PlacementRecord>,
}

pub fn placement_text(p: &TilePlacement, n_tiles: usize, cost: u64) -> String {
    let records: Vec<PlacementRecord> = p
        .as_slice()
        .iter()
        .enumerate()
        .map(|(cluster, &tile)| PlacementRecord { cluster, tile })
        .collect();
    record_doc(
        &[("n_tiles", n_tiles.to_string()), ("cost", cost.to_string())],
        "placement",
        &records,
    )
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathsDoc {
    paths: Vec<RoutedPath>,
}

pub fn paths_text(paths: &[RoutedPath]) -> String {
    record_doc(&[], "paths", paths)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    pub index: usize,
    pub paths: Vec<usize>,
    /// Run-length switch vector, see [`rle_string`].
    pub switches: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenariosDoc {
    #[allow(dead_code)]
    algorithm: Algorithm,
    n_paths: usize,
    n_switches: usize,
    scenarios: Vec<ScenarioRecord>,
}

pub fn scenarios_text(set: &ScenarioSet, algorithm: Algorithm, n_switches: usize) -> String {
    let records: Vec<ScenarioRecord> = set
        .groups()
        .iter()
        .zip(set.switch_vectors())
        .enumerate()
        .map(|(index, (g, v))| ScenarioRecord {
            index,
            paths: g.clone(),
            switches: rle_string(v),
        })
        .collect();
    record_doc(
        &[
            ("algorithm", format!("\"{algorithm}\"")),
            ("n_paths", set.n_paths().to_string()),
            ("n_switches", n_switches.to_string()),
        ],
        "scenarios",
        &records,
    )
}

/// Summary of the grouping stage, both algorithms side by side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupingDoc {
    pub algorithm: Algorithm,
    pub scenarios: usize,
    pub paths: usize,
    pub conflict_edges: usize,
    pub max_conflict_degree: usize,
    /// Max total cluster degree.
    pub lower_bound: usize,
    /// Largest clique found in the conflict graph.
    pub clique_number: usize,
    pub clique_calls: usize,
    pub fallbacks: usize,
    pub scenarios_greedy: usize,
    pub scenarios_maxclique: usize,
    pub raw_bits: usize,
    pub compressed_bits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionRecord {
    pub step: usize,
    pub resource: String,
    pub drivers: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDoc {
    pub steps: usize,
    pub frames: usize,
    pub frame_latency: usize,
    pub deliveries: u64,
    /// Paths not delivered exactly once per frame.
    pub undelivered: Vec<usize>,
    pub collisions: Vec<CollisionRecord>,
    pub misroutes: usize,
    pub energy: u64,
    pub clean: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostDoc {
    pub n_controllers: usize,
    pub ctrl_bits: usize,
    pub compressed_bits: usize,
    pub data_plane_units: f64,
    pub control_plane_units: f64,
    pub control_fraction: f64,
    pub coefficients: CostCoefficients,
}

pub fn controller_file(id: usize) -> String {
    format!("{CONTROLLERS_DIR}/ctrl_{id:03}.txt")
}

// ---- loaders ----

impl RunDir {
    pub fn load_graph(&self) -> Result<ClusterGraph, StateError> {
        parse_cluster_graph(&self.read(GRAPH_FILE)?).map_err(|e| doc_err(GRAPH_FILE, e))
    }

    pub fn save_graph(&self, g: &ClusterGraph) -> Result<(), StateError> {
        self.write(GRAPH_FILE, &write_cluster_graph(g))
    }

    pub fn load_topology(&self) -> Result<LadderTopology, StateError> {
        let s: TopologySummary = self.read_json(TOPOLOGY_FILE)?;
        topology_from_summary(&s).map_err(|e| doc_err(TOPOLOGY_FILE, e))
    }

    pub fn load_placement(
        &self,
        g: &ClusterGraph,
        topo: &LadderTopology,
    ) -> Result<TilePlacement, StateError> {
        let doc: PlacementDoc = self.read_json(PLACEMENT_FILE)?;
        if doc.n_tiles != topo.n_tiles {
            return Err(doc_err(PLACEMENT_FILE, "tile count differs from topology"));
        }
        let mut tile_of = vec![usize::MAX; doc.placement.len()];
        for r in &doc.placement {
            match tile_of.get_mut(r.cluster) {
                Some(t) if *t == usize::MAX => *t = r.tile,
                _ => {
                    return Err(doc_err(
                        PLACEMENT_FILE,
                        format!("cluster {} listed twice or out of range", r.cluster),
                    ))
                }
            }
        }
        let p = TilePlacement::new(tile_of, topo.n_tiles).map_err(|e| doc_err(PLACEMENT_FILE, e))?;
        p.validate(g, topo).map_err(|e| doc_err(PLACEMENT_FILE, e))?;
        Ok(p)
    }

    pub fn load_paths(&self) -> Result<Vec<RoutedPath>, StateError> {
        Ok(self.read_json::<PathsDoc>(PATHS_FILE)?.paths)
    }

    /// Rebuilds the scenario set from the path groups and checks it against
    /// the stored switch vectors.
    pub fn load_scenarios(
        &self,
        topo: &LadderTopology,
        paths: &[RoutedPath],
    ) -> Result<ScenarioSet, StateError> {
        let doc: ScenariosDoc = self.read_json(SCENARIOS_FILE)?;
        if doc.n_paths != paths.len() || doc.n_switches != topo.n_switches() {
            return Err(doc_err(SCENARIOS_FILE, "sizes differ from paths or topology"));
        }
        let groups = doc.scenarios.iter().map(|r| r.paths.clone()).collect();
        let set = ScenarioSet::assemble(topo, paths, groups).map_err(|e| doc_err(SCENARIOS_FILE, e))?;
        for (r, v) in doc.scenarios.iter().zip(set.switch_vectors()) {
            if parse_rle(&r.switches).as_ref() != Some(v) {
                return Err(doc_err(
                    SCENARIOS_FILE,
                    format!("scenario {}: switch vector does not match its paths", r.index),
                ));
            }
        }
        Ok(set)
    }

    pub fn load_grouping(&self) -> Result<GroupingDoc, StateError> {
        self.read_json(GROUPING_FILE)
    }

    pub fn save_programs(&self, programs: &[ControllerProgram]) -> Result<(), StateError> {
        for p in programs {
            self.write(&controller_file(p.region.id), &write_program(p))?;
        }
        Ok(())
    }

    /// Controller files in region order.
    pub fn load_programs(&self) -> Result<Vec<ControllerProgram>, StateError> {
        let dir = self.path(CONTROLLERS_DIR);
        let mut names: Vec<String> = fs::read_dir(&dir)
            .map_err(|source| StateError::Io {
                path: dir.clone(),
                source,
            })?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.starts_with("ctrl_") && n.ends_with(".txt"))
            .collect();
        names.sort();
        let mut programs = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            let file = format!("{CONTROLLERS_DIR}/{n}");
            let p = parse_program(&self.read(&file)?).map_err(|e| doc_err(&file, e))?;
            if p.region.id != i || file != controller_file(i) {
                return Err(doc_err(&file, format!("expected region {i}")));
            }
            programs.push(p);
        }
        Ok(programs)
    }

    pub fn load_sim(&self) -> Result<SimDoc, StateError> {
        self.read_json(SIM_FILE)
    }

    pub fn load_cost(&self) -> Result<CostDoc, StateError> {
        self.read_json(COST_FILE)
    }
}

/// Everything persisted in a run directory; absent stages are `None`.
#[derive(Clone, Debug, Default)]
pub struct PipelineState {
    pub graph: Option<ClusterGraph>,
    pub topology: Option<LadderTopology>,
    pub placement: Option<TilePlacement>,
    pub paths: Option<Vec<RoutedPath>>,
    pub scenarios: Option<ScenarioSet>,
    pub grouping: Option<GroupingDoc>,
    pub programs: Option<Vec<ControllerProgram>>,
    pub sim: Option<SimDoc>,
    pub cost: Option<CostDoc>,
}

impl PipelineState {
    pub fn load(dir: &RunDir) -> Result<Self, StateError> {
        let present = dir.present_stages()?;
        let mut st = PipelineState::default();
        for stage in present {
            match stage {
                Stage::Gen => st.graph = Some(dir.load_graph()?),
                Stage::Topology => st.topology = Some(dir.load_topology()?),
                Stage::Place => {
                    let (g, t) = (st.graph.as_ref().unwrap(), st.topology.as_ref().unwrap());
                    st.placement = Some(dir.load_placement(g, t)?);
                }
                Stage::Route => st.paths = Some(dir.load_paths()?),
                Stage::Group => {
                    let (t, p) = (st.topology.as_ref().unwrap(), st.paths.as_ref().unwrap());
                    st.scenarios = Some(dir.load_scenarios(t, p)?);
                    st.grouping = Some(dir.load_grouping()?);
                }
                Stage::EmitCtrl => st.programs = Some(dir.load_programs()?),
                Stage::Sim => st.sim = Some(dir.load_sim()?),
                Stage::Cost => st.cost = Some(dir.load_cost()?),
            }
        }
        Ok(st)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ladderbus_core::appgraph::generate_synthetic;
    use ladderbus_core::grouping::group_greedy;
    use ladderbus_core::placement::{place_greedy, placement_cost};
    use ladderbus_core::routing::extract_paths;

    #[test]
    fn rle_round_trip() {
        use SwitchState::*;
        let v = vec![Idle, Idle, Idle, RightRung, LeftRight, LeftRight, LeftRung, Idle];
        let s = rle_string(&v);
        assert_eq!(s, "0*3 3 1*2 2 0");
        assert_eq!(parse_rle(&s).unwrap(), v);
        assert_eq!(parse_rle("").unwrap(), Vec::new());
        assert!(parse_rle("4").is_none());
        assert!(parse_rle("0*0").is_none());
    }

    #[test]
    fn documents_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = RunDir::create(tmp.path()).unwrap();
        let g = generate_synthetic(14, 40, 3).unwrap();
        let t = LadderTopology::build(14, None).unwrap();
        let p = place_greedy(&g, &t).unwrap();
        let paths = extract_paths(&g, &t, &p).unwrap();
        let (set, _) = group_greedy(&t, &paths).unwrap();

        dir.save_graph(&g).unwrap();
        dir.write(TOPOLOGY_FILE, &json(&t.summary())).unwrap();
        dir.write(PLACEMENT_FILE, &placement_text(&p, t.n_tiles, placement_cost(&g, &t, &p).unwrap()))
            .unwrap();
        dir.write(PATHS_FILE, &paths_text(&paths)).unwrap();
        dir.write(SCENARIOS_FILE, &scenarios_text(&set, Algorithm::Greedy, t.n_switches()))
            .unwrap();

        assert_eq!(dir.load_graph().unwrap(), g);
        assert_eq!(dir.load_topology().unwrap(), t);
        assert_eq!(dir.load_placement(&g, &t).unwrap(), p);
        assert_eq!(dir.load_paths().unwrap(), paths);
        assert_eq!(dir.load_scenarios(&t, &paths).unwrap(), set);
    }

    #[test]
    fn stage_prefix_is_enforced() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = RunDir::create(tmp.path()).unwrap();
        assert!(dir.present_stages().unwrap().is_empty());
        dir.write(GRAPH_FILE, "{}").unwrap();
        dir.write(PATHS_FILE, "{}").unwrap();
        assert!(matches!(
            dir.present_stages(),
            Err(StateError::Gap { missing: Stage::Topology, present: Stage::Route })
        ));
        dir.invalidate_from(Stage::Topology).unwrap();
        assert_eq!(dir.present_stages().unwrap(), vec![Stage::Gen]);
        assert!(matches!(dir.require(Stage::Place), Err(StateError::Missing(Stage::Place))));
    }

    #[test]
    fn tampered_scenarios_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = RunDir::create(tmp.path()).unwrap();
        let g = generate_synthetic(10, 20, 1).unwrap();
        let t = LadderTopology::build(10, None).unwrap();
        let paths = extract_paths(&g, &t, &place_greedy(&g, &t).unwrap()).unwrap();
        let (set, _) = group_greedy(&t, &paths).unwrap();
        let text = scenarios_text(&set, Algorithm::Greedy, t.n_switches());
        let first = rle_string(&set.switch_vectors()[0]);
        let bad = text.replacen(&first, &format!("0*{}", t.n_switches()), 1);
        assert_ne!(bad, text);
        dir.write(SCENARIOS_FILE, &bad).unwrap();
        assert!(dir.load_scenarios(&t, &paths).is_err());
    }
}
