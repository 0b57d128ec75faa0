//! Lockstep execution of controller programs on the ladder.
//!
//! One scenario per step. At every step the switch vector is assembled from
//! all region memories, the rungs and segments are merged into electrical
//! nets through the switch port pairings, and each scheduled connection
//! drives the rung of its source column. A net driven by more than one
//! connection is a collision. Traversal within a step is combinational.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controlgen::{ControlError, ControllerProgram};
use crate::routing::RoutedPath;
use crate::topology::{LadderTopology, Resource, SwitchState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no controller programs")]
    NoPrograms,
    #[error("controller {0} has a different frame length")]
    FrameLength(usize),
    #[error("controller {controller}: schedule refers to scenario {index} but memory holds {len}")]
    UnknownScenario {
        controller: usize,
        index: usize,
        len: usize,
    },
    #[error("scenario membership refers to unknown path {0}")]
    UnknownPath(usize),
    #[error(transparent)]
    Program(#[from] ControlError),
}

/// A runtime flag raised before step `step` (global step count, inserted
/// steps included).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagEvent {
    pub step: usize,
    pub flag: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub step: usize,
    /// Lowest-ordered resource of the doubly driven net.
    pub resource: Resource,
    pub drivers: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    /// Scenario issued by controller 0.
    pub scenario: usize,
    pub active: Vec<Resource>,
    pub delivered: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub steps: usize,
    pub frames: usize,
    /// Steps per frame, i.e. the number of scheduled scenarios.
    pub frame_latency: usize,
    /// Deliveries per path (edge id order).
    pub delivered: Vec<u64>,
    pub collisions: Vec<Collision>,
    /// Singly driven nets that reach a rung other than the connection's
    /// endpoints, or miss the destination.
    pub misroutes: usize,
    /// Rungs plus segments carrying a driven signal, per step.
    pub active_per_step: Vec<usize>,
    pub energy: u64,
}

impl SimReport {
    pub fn collision_count(&self) -> usize {
        self.collisions.len()
    }

    pub fn is_clean(&self) -> bool {
        self.collisions.is_empty() && self.misroutes == 0
    }
}

/// Sum of activated rungs and segments over all steps.
pub fn energy_proxy(report: &SimReport) -> u64 {
    report.active_per_step.iter().map(|&a| a as u64).sum()
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Simulator over fixed programs and scenario membership.
pub struct Simulation<'a> {
    topo: &'a LadderTopology,
    programs: &'a [ControllerProgram],
    paths: &'a [RoutedPath],
    groups: &'a [Vec<usize>],
    /// Controller owning each column.
    owner: Vec<usize>,
    events: Vec<FlagEvent>,
    trace: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(
        topo: &'a LadderTopology,
        programs: &'a [ControllerProgram],
        paths: &'a [RoutedPath],
        groups: &'a [Vec<usize>],
    ) -> Result<Self, SimError> {
        let first = programs.first().ok_or(SimError::NoPrograms)?;
        let frame = first.schedule.frame_len();
        let mut owner = vec![usize::MAX; topo.n_columns];
        for (c, p) in programs.iter().enumerate() {
            p.check().map_err(|e| match e {
                ControlError::UnknownScenario { index, len } => SimError::UnknownScenario {
                    controller: c,
                    index,
                    len,
                },
                other => SimError::Program(other),
            })?;
            if p.schedule.frame_len() != frame {
                return Err(SimError::FrameLength(c));
            }
            for col in p.region.col_start..p.region.col_end.min(topo.n_columns) {
                owner[col] = c;
            }
        }
        crate::controlgen::decode_programs(topo, programs)?;
        if let Some(&p) = groups.iter().flatten().find(|&&p| p >= paths.len()) {
            return Err(SimError::UnknownPath(p));
        }
        Ok(Self {
            topo,
            programs,
            paths,
            groups,
            owner,
            events: Vec::new(),
            trace: false,
        })
    }

    pub fn with_events(mut self, mut events: Vec<FlagEvent>) -> Self {
        events.sort_by_key(|e| e.step);
        self.events = events;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    fn node_resource(&self, node: usize) -> Resource {
        let c = self.topo.n_columns;
        if node < c {
            Resource::Rung(node)
        } else {
            let s = node - c;
            let per_lane = c - 1;
            Resource::Segment {
                lane: s / per_lane,
                column: s % per_lane,
            }
        }
    }

    /// Runs `n_frames` frames and returns the report with an optional trace.
    pub fn run(&self, n_frames: usize) -> (SimReport, Vec<TraceRecord>) {
        let topo = self.topo;
        let frame = self.programs[0].schedule.frame_len();
        let n_nodes = topo.n_rungs() + topo.n_segments();
        let seg_node = |lane: usize, col: usize| topo.n_columns + topo.segment_index(lane, col);

        let mut report = SimReport {
            steps: 0,
            frames: n_frames,
            frame_latency: frame,
            delivered: vec![0; self.paths.len()],
            collisions: Vec::new(),
            misroutes: 0,
            active_per_step: Vec::new(),
            energy: 0,
        };
        let mut trace = Vec::new();
        let mut events = self.events.iter().peekable();

        let mut pos = 0;
        let total = n_frames * frame;
        while pos < total {
            let step = report.steps;
            let mut raised = Vec::new();
            while let Some(e) = events.next_if(|e| e.step <= step) {
                raised.push(e.flag);
            }
            // A raised guard flag inserts one step of the guarded scenario;
            // otherwise the shared counter advances.
            let issued: Vec<usize> = self
                .programs
                .iter()
                .map(|p| match p.schedule.guard {
                    Some(g) if raised.contains(&g.flag) => g.scenario,
                    _ => p.schedule.scenario_at(pos % frame),
                })
                .collect();
            let inserted = self
                .programs
                .iter()
                .any(|p| p.schedule.guard.is_some_and(|g| raised.contains(&g.flag)));
            if !inserted {
                pos += 1;
            }

            let mut dsu = Dsu::new(n_nodes);
            for (c, p) in self.programs.iter().enumerate() {
                let states = p.decode_word(issued[c]);
                for (i, state) in states.into_iter().enumerate() {
                    let global = p.region.switch_range().start + i;
                    let id = topo.switch_at(global);
                    let (lane, col) = (id.lane, id.column);
                    let left = (col > 0).then(|| seg_node(lane, col - 1));
                    let right = (col + 1 < topo.n_columns).then(|| seg_node(lane, col));
                    let rung = col;
                    let pair = match state {
                        SwitchState::Idle => None,
                        SwitchState::LeftRight => left.zip(right),
                        SwitchState::LeftRung => left.map(|l| (l, rung)),
                        SwitchState::RightRung => right.map(|r| (r, rung)),
                    };
                    match pair {
                        Some((a, b)) => dsu.union(a, b),
                        None if state != SwitchState::Idle => report.misroutes += 1,
                        None => {}
                    }
                }
            }

            // Connections scheduled by the controller owning their source.
            let active: Vec<&RoutedPath> = self
                .groups
                .iter()
                .enumerate()
                .flat_map(|(k, g)| g.iter().map(move |&p| (k, p)))
                .filter(|&(k, p)| {
                    let col = topo.column_of(self.paths[p].src);
                    issued[self.owner[col]] == k
                })
                .map(|(_, p)| &self.paths[p])
                .collect();

            let mut drivers = vec![0usize; n_nodes];
            for p in &active {
                let root = dsu.find(topo.column_of(p.src));
                drivers[root] += 1;
            }
            let mut rungs_in_net = vec![0usize; n_nodes];
            for r in 0..topo.n_rungs() {
                let root = dsu.find(r);
                rungs_in_net[root] += 1;
            }

            let mut delivered = Vec::new();
            for p in &active {
                let net = dsu.find(topo.column_of(p.src));
                if drivers[net] != 1 {
                    continue;
                }
                let reaches = dsu.find(topo.column_of(p.dst)) == net;
                if reaches && rungs_in_net[net] == p.n_rungs() {
                    report.delivered[p.edge] += 1;
                    delivered.push(p.edge);
                } else {
                    report.misroutes += 1;
                }
            }
            delivered.sort_unstable();

            let mut active_nodes = Vec::new();
            let mut flagged = vec![false; n_nodes];
            for node in 0..n_nodes {
                let root = dsu.find(node);
                if drivers[root] > 0 {
                    active_nodes.push(node);
                }
                if drivers[root] > 1 && !flagged[root] {
                    flagged[root] = true;
                    report.collisions.push(Collision {
                        step,
                        resource: self.node_resource(node),
                        drivers: drivers[root],
                    });
                }
            }
            report.active_per_step.push(active_nodes.len());
            report.energy += active_nodes.len() as u64;
            if self.trace {
                trace.push(TraceRecord {
                    step,
                    scenario: issued[0],
                    active: active_nodes.iter().map(|&n| self.node_resource(n)).collect(),
                    delivered,
                });
            }
            report.steps += 1;
        }
        (report, trace)
    }
}

/// Runs `n_frames` frames without flags or tracing.
pub fn run_frames(
    topo: &LadderTopology,
    programs: &[ControllerProgram],
    paths: &[RoutedPath],
    groups: &[Vec<usize>],
    n_frames: usize,
) -> Result<SimReport, SimError> {
    Ok(Simulation::new(topo, programs, paths, groups)?.run(n_frames).0)
}
