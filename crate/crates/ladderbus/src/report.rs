//! Run summaries in text or JSON.

use std::fmt::Write as _;

use ladderbus_core::controlgen::control_memory_bits;
use ladderbus_core::pipeline::Stage;
use ladderbus_core::placement::placement_cost;
use ladderbus_core::topology::TopologySummary;
use ladderbus_core::GraphMetrics;
use serde::Serialize;

use crate::state::{CostDoc, GroupingDoc, PipelineState, SimDoc, StateError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphSection {
    pub name: String,
    #[serde(flatten)]
    pub metrics: GraphMetrics,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ControllerSection {
    pub n_controllers: usize,
    pub word_bits: Vec<usize>,
    pub frame_len: usize,
    pub memory_bits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub graph: GraphSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placement_cost: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouping: Option<GroupingDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controllers: Option<ControllerSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostDoc>,
}

/// Needs at least the graph; every later section is included when present.
pub fn build_report(st: &PipelineState) -> Result<Report, StateError> {
    let g = st.graph.as_ref().ok_or(StateError::Missing(Stage::Gen))?;
    let placement_cost = match (&st.topology, &st.placement) {
        (Some(t), Some(p)) => Some(placement_cost(g, t, p).map_err(|e| StateError::Document {
            file: crate::state::PLACEMENT_FILE.into(),
            message: e.to_string(),
        })?),
        _ => None,
    };
    Ok(Report {
        graph: GraphSection {
            name: g.name().to_string(),
            metrics: g.metrics().map_err(|e| StateError::Document {
                file: crate::state::GRAPH_FILE.into(),
                message: e.to_string(),
            })?,
        },
        topology: st.topology.map(|t| t.summary()),
        placement_cost,
        paths: st.paths.as_ref().map(Vec::len),
        grouping: st.grouping.clone(),
        controllers: st.programs.as_ref().map(|ps| ControllerSection {
            n_controllers: ps.len(),
            word_bits: ps.iter().map(|p| p.word_bits()).collect(),
            frame_len: ps.first().map_or(0, |p| p.schedule.frame_len()),
            memory_bits: control_memory_bits(ps),
        }),
        sim: st.sim.clone(),
        cost: st.cost.clone(),
    })
}

pub fn report_json(r: &Report) -> String {
    crate::state::json(r)
}

pub fn report_text(r: &Report) -> String {
    let mut out = String::new();
    let m = &r.graph.metrics;
    writeln!(out, "graph        {}", r.graph.name).unwrap();
    writeln!(
        out,
        "             clusters={} edges={} avg_degree={:.2} density={:.4} max_total_degree={}",
        m.n_clusters, m.n_edges, m.avg_degree, m.density, m.max_total_degree
    )
    .unwrap();
    if let Some(t) = &r.topology {
        writeln!(
            out,
            "topology     tiles={} lanes={} columns={} switches={} segments={} rungs={}",
            t.tiles, t.lanes, t.columns, t.switches, t.segments, t.rungs
        )
        .unwrap();
    }
    if let Some(c) = r.placement_cost {
        writeln!(out, "placement    cost={c}").unwrap();
    }
    if let Some(p) = r.paths {
        writeln!(out, "routing      paths={p}").unwrap();
    }
    if let Some(g) = &r.grouping {
        writeln!(
            out,
            "grouping     algorithm={} scenarios={} greedy={} maxclique={} lower_bound={} clique_number={} fallbacks={}",
            g.algorithm,
            g.scenarios,
            g.scenarios_greedy,
            g.scenarios_maxclique,
            g.lower_bound,
            g.clique_number,
            g.fallbacks
        )
        .unwrap();
        writeln!(
            out,
            "             raw_bits={} compressed_bits={}",
            g.raw_bits, g.compressed_bits
        )
        .unwrap();
    }
    if let Some(c) = &r.controllers {
        writeln!(
            out,
            "controllers  count={} frame_len={} memory_bits={}",
            c.n_controllers, c.frame_len, c.memory_bits
        )
        .unwrap();
    }
    if let Some(s) = &r.sim {
        writeln!(
            out,
            "sim          steps={} frames={} frame_latency={} deliveries={} collisions={} misroutes={} energy={} clean={}",
            s.steps,
            s.frames,
            s.frame_latency,
            s.deliveries,
            s.collisions.len(),
            s.misroutes,
            s.energy,
            s.clean
        )
        .unwrap();
    }
    if let Some(c) = &r.cost {
        writeln!(
            out,
            "cost         data_plane={:.1} control_plane={:.1} control_fraction={:.4}",
            c.data_plane_units, c.control_plane_units, c.control_fraction
        )
        .unwrap();
    }
    out
}
