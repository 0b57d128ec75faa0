//! Segmented ladder bus hardware model.
//!
//! Tiles sit in two rows; tile `t` occupies row `t % 2` of column `t / 2`.
//! Every column carries one vertical rung shared by its two tiles and by the
//! three-way switch of every lane in that column. Lane `l` is cut into
//! horizontal segments between adjacent columns; segment `(l, c)` joins the
//! switches at columns `c` and `c + 1`.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LANE_WIDTH_BITS: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("a ladder needs at least 2 tiles, got {0}")]
    TooFewTiles(usize),
    #[error("a ladder needs at least 1 lane")]
    NoLanes,
    #[error("tile {tile} out of range (n_tiles = {n_tiles})")]
    TileOutOfRange { tile: usize, n_tiles: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LadderTopology {
    pub n_tiles: usize,
    pub n_lanes: usize,
    pub n_columns: usize,
    pub lane_width_bits: u32,
}

/// `round_half_up(sqrt(n))` in exact integer arithmetic: the `k` with
/// `(2k - 1)^2 <= 4n < (2k + 1)^2`.
pub fn default_lanes(n_tiles: usize) -> usize {
    let four_n = 4 * n_tiles as u128;
    let mut k = libm::sqrt(n_tiles as f64) as u128;
    while k > 0 && (2 * k - 1) * (2 * k - 1) > four_n {
        k -= 1;
    }
    while (2 * k + 1) * (2 * k + 1) <= four_n {
        k += 1;
    }
    k as usize
}

impl LadderTopology {
    /// Builds a ladder for `n_tiles` tiles. Without an explicit lane count the
    /// lane count is the rounded square root of the tile count.
    pub fn build(n_tiles: usize, n_lanes: Option<usize>) -> Result<Self, TopologyError> {
        if n_tiles < 2 {
            return Err(TopologyError::TooFewTiles(n_tiles));
        }
        let n_lanes = n_lanes.unwrap_or_else(|| default_lanes(n_tiles));
        if n_lanes == 0 {
            return Err(TopologyError::NoLanes);
        }
        Ok(Self {
            n_tiles,
            n_lanes,
            n_columns: n_tiles.div_ceil(2),
            lane_width_bits: DEFAULT_LANE_WIDTH_BITS,
        })
    }

    pub fn with_lane_width(mut self, bits: u32) -> Self {
        self.lane_width_bits = bits;
        self
    }

    pub fn n_switches(&self) -> usize {
        self.n_lanes * self.n_columns
    }

    pub fn n_segments(&self) -> usize {
        self.n_lanes * (self.n_columns - 1)
    }

    pub fn n_rungs(&self) -> usize {
        self.n_columns
    }

    pub fn tile_coordinates(&self, tile: usize) -> Result<(usize, usize), TopologyError> {
        if tile >= self.n_tiles {
            return Err(TopologyError::TileOutOfRange {
                tile,
                n_tiles: self.n_tiles,
            });
        }
        Ok((tile % 2, tile / 2))
    }

    /// Column of a tile; callers guarantee range.
    #[inline]
    pub fn column_of(&self, tile: usize) -> usize {
        tile / 2
    }

    /// Column-major switch index: all lanes of column 0 first.
    #[inline]
    pub fn switch_index(&self, id: SwitchId) -> usize {
        id.column * self.n_lanes + id.lane
    }

    pub fn switch_at(&self, index: usize) -> SwitchId {
        SwitchId {
            lane: index % self.n_lanes,
            column: index / self.n_lanes,
        }
    }

    #[inline]
    pub fn segment_index(&self, lane: usize, column: usize) -> usize {
        lane * (self.n_columns - 1) + column
    }

    pub fn summary(&self) -> TopologySummary {
        TopologySummary {
            tiles: self.n_tiles,
            lanes: self.n_lanes,
            columns: self.n_columns,
            lane_width_bits: self.lane_width_bits,
            switches: self.n_switches(),
            segments: self.n_segments(),
            rungs: self.n_rungs(),
        }
    }
}

/// Flat record of a topology and its resource counts, for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub tiles: usize,
    pub lanes: usize,
    pub columns: usize,
    pub lane_width_bits: u32,
    pub switches: usize,
    pub segments: usize,
    pub rungs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SwitchId {
    pub lane: usize,
    pub column: usize,
}

/// Port pairing of a three-way switch. The discriminant is the 2-bit code
/// stored in controller memory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum SwitchState {
    #[default]
    Idle = 0,
    LeftRight = 1,
    LeftRung = 2,
    RightRung = 3,
}

impl SwitchState {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Idle),
            1 => Some(Self::LeftRight),
            2 => Some(Self::LeftRung),
            3 => Some(Self::RightRung),
            _ => None,
        }
    }
}

/// A physical wire or switch of the ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resource {
    /// Vertical wire of a column.
    Rung(usize),
    /// Lane segment between `column` and `column + 1`.
    Segment { lane: usize, column: usize },
    Switch { lane: usize, column: usize },
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Resource::Rung(c) => write!(f, "R{}", c),
            Resource::Segment { lane, column } => write!(f, "S{}.{}", lane, column),
            Resource::Switch { lane, column } => write!(f, "W{}.{}", lane, column),
        }
    }
}

impl Resource {
    /// Parses the `R3` / `S1.4` / `W1.4` notation used in trace logs.
    pub fn parse(s: &str) -> Option<Self> {
        let (kind, rest) = s.split_at(s.char_indices().nth(1)?.0);
        let pair = |r: &str| -> Option<(usize, usize)> {
            let (a, b) = r.split_once('.')?;
            Some((a.parse().ok()?, b.parse().ok()?))
        };
        match kind {
            "R" => rest.parse().ok().map(Resource::Rung),
            "S" => pair(rest).map(|(lane, column)| Resource::Segment { lane, column }),
            "W" => pair(rest).map(|(lane, column)| Resource::Switch { lane, column }),
            _ => None,
        }
    }
}

/// All switches of the topology, in switch-index order.
pub fn all_switches(topo: &LadderTopology) -> Vec<SwitchId> {
    (0..topo.n_switches()).map(|i| topo.switch_at(i)).collect()
}
