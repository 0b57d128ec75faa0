//! Compilation of scenario sets into distributed controller programs.
//!
//! Each controller drives a contiguous block of columns (all lanes). Its
//! memory holds one word per scenario: the 2-bit states of its switches,
//! switch `i` of the region at bits `2i..2i+2`. All controllers run the same
//! schedule on a shared step counter.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouping::ScenarioSet;
use crate::topology::{default_lanes, LadderTopology, SwitchState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ControlError {
    #[error("{requested} controllers requested for {columns} columns")]
    ControllerCount { requested: usize, columns: usize },
    #[error("regions do not tile the {columns} columns of the topology")]
    RegionMismatch { columns: usize },
    #[error("frame order is not a permutation of 0..{0}")]
    BadPermutation(usize),
    #[error("scenario set has {got} switches per vector, topology has {want}")]
    VectorWidth { got: usize, want: usize },
    #[error("word of {got} bytes where {want} were expected")]
    WordWidth { got: usize, want: usize },
    #[error("schedule refers to scenario {index} but memory holds {len}")]
    UnknownScenario { index: usize, len: usize },
    #[error("controllers disagree on frame length")]
    FrameLength,
}

/// Contiguous block of columns `[col_start, col_end)` and all their lanes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerRegion {
    pub id: usize,
    pub col_start: usize,
    pub col_end: usize,
    pub n_lanes: usize,
}

impl ControllerRegion {
    pub fn n_columns(&self) -> usize {
        self.col_end - self.col_start
    }

    pub fn n_switches(&self) -> usize {
        self.n_columns() * self.n_lanes
    }

    pub fn word_bits(&self) -> usize {
        2 * self.n_switches()
    }

    pub fn word_bytes(&self) -> usize {
        self.word_bits().div_ceil(8)
    }

    /// Global (column-major) switch index range covered by the region.
    pub fn switch_range(&self) -> core::ops::Range<usize> {
        self.col_start * self.n_lanes..self.col_end * self.n_lanes
    }
}

/// `round(sqrt(n_columns))`, at least one.
pub fn default_controllers(topo: &LadderTopology) -> usize {
    default_lanes(topo.n_columns).max(1)
}

/// Splits the columns into `n_controllers` contiguous blocks whose sizes
/// differ by at most one, larger blocks first.
pub fn partition_regions(
    topo: &LadderTopology,
    n_controllers: usize,
) -> Result<Vec<ControllerRegion>, ControlError> {
    let columns = topo.n_columns;
    if n_controllers == 0 || n_controllers > columns {
        return Err(ControlError::ControllerCount {
            requested: n_controllers,
            columns,
        });
    }
    let (base, extra) = (columns / n_controllers, columns % n_controllers);
    let mut start = 0;
    Ok((0..n_controllers)
        .map(|id| {
            let size = base + usize::from(id < extra);
            let r = ControllerRegion {
                id,
                col_start: start,
                col_end: start + size,
                n_lanes: topo.n_lanes,
            };
            start += size;
            r
        })
        .collect())
}

fn check_regions(topo: &LadderTopology, regions: &[ControllerRegion]) -> Result<(), ControlError> {
    let mut next = 0;
    for r in regions {
        if r.col_start != next || r.col_end <= r.col_start || r.n_lanes != topo.n_lanes {
            return Err(ControlError::RegionMismatch {
                columns: topo.n_columns,
            });
        }
        next = r.col_end;
    }
    if next != topo.n_columns {
        return Err(ControlError::RegionMismatch {
            columns: topo.n_columns,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub scenario: usize,
    pub repeat: usize,
}

/// Alternate scenario issued for one step when a runtime flag is raised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guard {
    pub flag: u32,
    pub scenario: usize,
}

/// Two-level loop nest: an infinite outer loop over one frame, the frame
/// being the entry list with per-entry repeat counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
    pub guard: Option<Guard>,
}

impl Schedule {
    pub fn frame_len(&self) -> usize {
        self.entries.iter().map(|e| e.repeat).sum()
    }

    /// Scenario issued at position `pos` of the frame.
    pub fn scenario_at(&self, mut pos: usize) -> usize {
        for e in &self.entries {
            if pos < e.repeat {
                return e.scenario;
            }
            pos -= e.repeat;
        }
        unreachable!("position beyond frame")
    }

    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .flat_map(|e| core::iter::repeat_n(e.scenario, e.repeat))
    }

    pub fn with_guard(mut self, flag: u32, scenario: usize) -> Self {
        self.guard = Some(Guard { flag, scenario });
        self
    }
}

/// One pass over the scenarios per frame, in index order or in
/// `frame_order`.
pub fn build_schedule(
    n_scenarios: usize,
    frame_order: Option<&[usize]>,
) -> Result<Schedule, ControlError> {
    let order: Vec<usize> = match frame_order {
        None => (0..n_scenarios).collect(),
        Some(order) => {
            let mut seen = vec![false; n_scenarios];
            if order.len() != n_scenarios {
                return Err(ControlError::BadPermutation(n_scenarios));
            }
            for &i in order {
                if i >= n_scenarios || core::mem::replace(&mut seen[i], true) {
                    return Err(ControlError::BadPermutation(n_scenarios));
                }
            }
            order.to_vec()
        }
    };
    Ok(Schedule {
        entries: order
            .into_iter()
            .map(|scenario| ScheduleEntry {
                scenario,
                repeat: 1,
            })
            .collect(),
        guard: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerProgram {
    pub region: ControllerRegion,
    /// One packed word per scenario, `region.word_bytes()` bytes each.
    pub memory: Vec<Vec<u8>>,
    pub schedule: Schedule,
}

impl ControllerProgram {
    pub fn word_bits(&self) -> usize {
        self.region.word_bits()
    }

    pub fn memory_bits(&self) -> usize {
        self.memory.len() * self.word_bits()
    }

    /// Switch states of scenario `k`, region-local order.
    pub fn decode_word(&self, k: usize) -> Vec<SwitchState> {
        unpack(&self.memory[k], self.region.n_switches())
    }

    pub fn check(&self) -> Result<(), ControlError> {
        let want = self.region.word_bytes();
        if let Some(w) = self.memory.iter().find(|w| w.len() != want) {
            return Err(ControlError::WordWidth { got: w.len(), want });
        }
        let len = self.memory.len();
        let guard = self.schedule.guard.map(|g| g.scenario);
        for index in self.schedule.entries.iter().map(|e| e.scenario).chain(guard) {
            if index >= len {
                return Err(ControlError::UnknownScenario { index, len });
            }
        }
        Ok(())
    }
}

pub fn pack(states: &[SwitchState]) -> Vec<u8> {
    let mut word = vec![0u8; (2 * states.len()).div_ceil(8)];
    for (i, s) in states.iter().enumerate() {
        word[i / 4] |= s.code() << (2 * (i % 4));
    }
    word
}

pub fn unpack(word: &[u8], n_switches: usize) -> Vec<SwitchState> {
    (0..n_switches)
        .map(|i| {
            let code = (word[i / 4] >> (2 * (i % 4))) & 0b11;
            SwitchState::from_code(code).expect("2-bit code")
        })
        .collect()
}

/// Projects every scenario's switch vector onto each region.
pub fn encode_scenarios(
    topo: &LadderTopology,
    set: &ScenarioSet,
    regions: &[ControllerRegion],
    schedule: &Schedule,
) -> Result<Vec<ControllerProgram>, ControlError> {
    check_regions(topo, regions)?;
    if let Some(v) = set.switch_vectors().iter().find(|v| v.len() != topo.n_switches()) {
        return Err(ControlError::VectorWidth {
            got: v.len(),
            want: topo.n_switches(),
        });
    }
    regions
        .iter()
        .map(|&region| {
            let program = ControllerProgram {
                region,
                memory: set
                    .switch_vectors()
                    .iter()
                    .map(|v| pack(&v[region.switch_range()]))
                    .collect(),
                schedule: schedule.clone(),
            };
            program.check().map(|_| program)
        })
        .collect()
}

/// Reassembles global switch vectors from all controllers' memories.
pub fn decode_programs(
    topo: &LadderTopology,
    programs: &[ControllerProgram],
) -> Result<Vec<Vec<SwitchState>>, ControlError> {
    let regions: Vec<ControllerRegion> = programs.iter().map(|p| p.region).collect();
    check_regions(topo, &regions)?;
    let n_scen = programs.first().map_or(0, |p| p.memory.len());
    let mut out = vec![vec![SwitchState::Idle; topo.n_switches()]; n_scen];
    for p in programs {
        p.check()?;
        if p.memory.len() != n_scen {
            return Err(ControlError::UnknownScenario {
                index: n_scen.min(p.memory.len()),
                len: p.memory.len(),
            });
        }
        for (k, v) in out.iter_mut().enumerate() {
            v[p.region.switch_range()].copy_from_slice(&p.decode_word(k));
        }
    }
    Ok(out)
}

/// Total scenario memory over all controllers, in bits.
pub fn control_memory_bits(programs: &[ControllerProgram]) -> usize {
    programs.iter().map(ControllerProgram::memory_bits).sum()
}

/// Same total computed from sizes alone.
pub fn control_memory_bits_for(topo: &LadderTopology, n_scenarios: usize) -> usize {
    n_scenarios * 2 * topo.n_switches()
}

/// Maximal runs of equal states, in switch order.
pub fn run_lengths(states: &[SwitchState]) -> Vec<(SwitchState, usize)> {
    let mut runs: Vec<(SwitchState, usize)> = Vec::new();
    for &s in states {
        match runs.last_mut() {
            Some((last, len)) if *last == s => *len += 1,
            _ => runs.push((s, 1)),
        }
    }
    runs
}

/// Inverse of [`run_lengths`].
pub fn expand_runs(runs: &[(SwitchState, usize)]) -> Vec<SwitchState> {
    runs.iter()
        .flat_map(|&(s, len)| core::iter::repeat_n(s, len))
        .collect()
}

/// Size of the run-length form of every vector: per run a 2-bit state and
/// a count of `bit_length(n_switches)` bits.
pub fn compressed_bits(topo: &LadderTopology, vectors: &[Vec<SwitchState>]) -> usize {
    let count_bits = (usize::BITS - topo.n_switches().leading_zeros()) as usize;
    vectors
        .iter()
        .map(|v| run_lengths(v).len() * (2 + count_bits))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appgraph::generate_synthetic;
    use crate::grouping::{group_max_clique, Unlimited};
    use crate::placement::place_greedy;
    use crate::routing::extract_paths;

    fn topo(tiles: usize, lanes: usize) -> LadderTopology {
        LadderTopology::build(tiles, Some(lanes)).unwrap()
    }

    fn instance(n: usize, e: usize, seed: u64) -> (LadderTopology, ScenarioSet) {
        let g = generate_synthetic(n, e, seed).unwrap();
        let t = LadderTopology::build(n, None).unwrap();
        let p = place_greedy(&g, &t).unwrap();
        let paths = extract_paths(&g, &t, &p).unwrap();
        let (set, _) = group_max_clique(&t, &paths, &mut Unlimited).unwrap();
        (t, set)
    }

    #[test]
    fn region_partitions() {
        let t = topo(8, 3);
        let one = partition_regions(&t, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].n_switches(), 12);

        let two = partition_regions(&t, 2).unwrap();
        assert_eq!((two[0].col_start, two[0].col_end), (0, 2));
        assert_eq!((two[1].col_start, two[1].col_end), (2, 4));

        let t5 = topo(10, 2);
        let sizes: Vec<usize> = partition_regions(&t5, 2)
            .unwrap()
            .iter()
            .map(ControllerRegion::n_columns)
            .collect();
        assert_eq!(sizes, vec![3, 2]);

        assert!(partition_regions(&t, 0).is_err());
        assert!(partition_regions(&t, 5).is_err());
    }

    #[test]
    fn schedules() {
        let s = build_schedule(8, None).unwrap();
        assert_eq!(s.frame_len(), 8);
        assert_eq!(build_schedule(1, None).unwrap().frame_len(), 1);
        let s = build_schedule(3, Some(&[2, 0, 1])).unwrap();
        assert_eq!(s.steps().collect::<Vec<_>>(), vec![2, 0, 1]);
        assert_eq!(s.scenario_at(1), 0);
        assert!(build_schedule(3, Some(&[0, 0, 1])).is_err());
        assert!(build_schedule(3, Some(&[0, 1])).is_err());
        assert!(build_schedule(3, Some(&[0, 1, 3])).is_err());
    }

    #[test]
    fn single_region_is_identity() {
        let (t, set) = instance(12, 30, 2);
        let regions = partition_regions(&t, 1).unwrap();
        let sched = build_schedule(set.len(), None).unwrap();
        let progs = encode_scenarios(&t, &set, &regions, &sched).unwrap();
        for (k, v) in set.switch_vectors().iter().enumerate() {
            assert_eq!(progs[0].decode_word(k), *v);
            assert_eq!(progs[0].memory[k], pack(v));
        }
    }

    #[test]
    fn idle_scenario_encodes_to_zero() {
        let t = topo(8, 3);
        let paths = [crate::routing::RoutedPath {
            edge: 0,
            src: 0,
            dst: 1,
            lane: 0,
            cmin: 0,
            cmax: 0,
        }];
        let set = ScenarioSet::assemble(&t, &paths, vec![vec![0]]).unwrap();
        let regions = partition_regions(&t, 2).unwrap();
        let progs = encode_scenarios(&t, &set, &regions, &build_schedule(1, None).unwrap()).unwrap();
        for p in &progs {
            assert!(p.memory[0].iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn three_region_roundtrip() {
        let (t, set) = instance(40, 160, 1);
        let regions = partition_regions(&t, 3).unwrap();
        let sched = build_schedule(set.len(), None).unwrap();
        let progs = encode_scenarios(&t, &set, &regions, &sched).unwrap();
        assert_eq!(decode_programs(&t, &progs).unwrap(), set.switch_vectors());
        assert_eq!(
            control_memory_bits(&progs),
            control_memory_bits_for(&t, set.len())
        );
        assert!(progs.iter().all(|p| p.schedule.frame_len() == set.len()));
    }

    #[test]
    fn region_mismatch() {
        let (t, set) = instance(12, 20, 3);
        let mut regions = partition_regions(&t, 2).unwrap();
        regions[1].col_end -= 1;
        let sched = build_schedule(set.len(), None).unwrap();
        assert!(matches!(
            encode_scenarios(&t, &set, &regions, &sched),
            Err(ControlError::RegionMismatch { .. })
        ));
    }

    #[test]
    fn unknown_scenario_in_schedule() {
        let (t, set) = instance(12, 20, 3);
        let regions = partition_regions(&t, 1).unwrap();
        let sched = build_schedule(set.len() + 1, None).unwrap();
        assert!(matches!(
            encode_scenarios(&t, &set, &regions, &sched),
            Err(ControlError::UnknownScenario { .. })
        ));
    }

    #[test]
    fn default_controller_count() {
        assert_eq!(default_controllers(&topo(11, 3)), 2);
        assert_eq!(default_controllers(&topo(30, 5)), 4);
        assert_eq!(default_controllers(&topo(2, 1)), 1);
    }

    #[test]
    fn run_length_round_trip() {
        use SwitchState::*;
        let v = vec![Idle, Idle, RightRung, LeftRight, LeftRight, LeftRung, Idle];
        let runs = run_lengths(&v);
        assert_eq!(
            runs,
            vec![(Idle, 2), (RightRung, 1), (LeftRight, 2), (LeftRung, 1), (Idle, 1)]
        );
        assert_eq!(expand_runs(&runs), v);
        assert!(run_lengths(&[]).is_empty());
    }

    #[test]
    fn compressed_size() {
        // 12 switches: counts take 4 bits, so 6 bits per run.
        let t = LadderTopology::build(8, Some(3)).unwrap();
        let idle = vec![SwitchState::Idle; 12];
        let mut one = idle.clone();
        one[5] = SwitchState::LeftRight;
        assert_eq!(compressed_bits(&t, &[idle, one]), 6 + 3 * 6);
    }
}
