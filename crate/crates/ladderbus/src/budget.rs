use std::time::{Duration, Instant};

use ladderbus_core::grouping::CliqueBudget;

/// Wall-clock limit per clique search.
#[derive(Clone, Copy, Debug)]
pub struct Deadline {
    limit: Duration,
    started: Instant,
}

impl Deadline {
    pub const DEFAULT_SECS: f64 = 10.0;

    pub fn new(limit: Duration) -> Self {
        Self {
            limit,
            started: Instant::now(),
        }
    }

    pub fn from_secs(secs: f64) -> Self {
        Self::new(Duration::from_secs_f64(secs))
    }
}

impl Default for Deadline {
    fn default() -> Self {
        Self::from_secs(Self::DEFAULT_SECS)
    }
}

impl CliqueBudget for Deadline {
    fn start(&mut self) {
        self.started = Instant::now();
    }

    fn exhausted(&mut self) -> bool {
        self.started.elapsed() >= self.limit
    }
}
