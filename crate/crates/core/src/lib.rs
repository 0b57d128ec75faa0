//! Compile-time flow for the segmented ladder bus.
//!
//! The crate maps a cluster graph onto ladder tiles, routes every connection
//! to a lane, groups the routed paths into non-intersecting switching
//! scenarios and compiles those scenarios into per-region controller
//! programs. A lockstep simulator and an analytic area model close the loop.
//!
//! Everything here is `no_std` + `alloc`; file formats, the wall-clock
//! clique budget and the command-line driver live in the `ladderbus` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod appgraph;
pub mod bitset;
pub mod controlgen;
pub mod costmodel;
pub mod grouping;
pub mod pipeline;
pub mod placement;
pub mod routing;
pub mod seed;
pub mod sim;
pub mod topology;

pub use appgraph::{ClusterGraph, Edge, GraphError, GraphMetrics, WeightRange};
pub use controlgen::{
    ControlError, ControllerProgram, ControllerRegion, Schedule, ScheduleEntry,
};
pub use costmodel::{CostCoefficients, CostError, CostReport, PlaneObservation};
pub use grouping::{
    ConflictGraph, GroupingError, GroupingStats, ScenarioSet, MAX_EXACT_PATHS,
};
pub use placement::{AnnealParams, PlacementError, TilePlacement};
pub use routing::{LaneLoad, RoutedPath, RoutingError};
pub use sim::{SimError, SimReport};
pub use topology::{LadderTopology, Resource, SwitchId, SwitchState, TopologyError};
