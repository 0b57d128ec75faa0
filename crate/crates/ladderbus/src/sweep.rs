//! Scaling sweeps over synthetic instances.

use ladderbus_core::costmodel::CostCoefficients;
use ladderbus_core::grouping::Algorithm;
use ladderbus_core::pipeline::{sweep_instance, FlowError, SweepRow, SWEEP_HEADER};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::Deadline;
use crate::config::SweepSection;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("instance n={n} density={density} seed={seed} algo={algo}: {source}")]
    Instance {
        n: usize,
        density: f64,
        seed: u64,
        algo: Algorithm,
        #[source]
        source: FlowError,
    },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("sweep table: {0}")]
    Table(String),
}

/// Instance keys in table order: sizes, then densities, seeds, algorithms.
pub fn sweep_keys(s: &SweepSection) -> Vec<(usize, f64, u64, Algorithm)> {
    let mut keys = Vec::new();
    for &n in &s.sizes {
        for &d in &s.densities {
            for &seed in &s.seeds {
                for &a in &s.algorithms {
                    keys.push((n, d, seed, a));
                }
            }
        }
    }
    keys
}

/// Runs every instance on a pool of `s.workers` threads (0: all cores).
/// Rows come back in key order whatever the scheduling.
pub fn run_sweep(
    s: &SweepSection,
    coefficients: &CostCoefficients,
    clique_budget_secs: f64,
) -> Result<Vec<SweepRow>, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.workers)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let keys = sweep_keys(s);
    pool.install(|| {
        keys.par_iter()
            .map(|&(n, density, seed, algo)| {
                let mut budget = Deadline::from_secs(clique_budget_secs);
                let row = sweep_instance(n, density, seed, algo, coefficients, &mut budget)
                    .map_err(|source| SweepError::Instance {
                        n,
                        density,
                        seed,
                        algo,
                        source,
                    })?;
                if row.fallbacks > 0 {
                    log::warn!(
                        "n={n} density={density} seed={seed} algo={algo}: {} clique searches hit the budget",
                        row.fallbacks
                    );
                }
                Ok(row)
            })
            .collect()
    })
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    n: usize,
    density: f64,
    seed: u64,
    algo: Algorithm,
    #[serde(rename = "E")]
    e: usize,
    scenarios: usize,
    lower_bound: usize,
    ctrl_bits: usize,
    ctrl_frac: f64,
}

pub fn write_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(CsvRow {
            n: r.n,
            density: r.density,
            seed: r.seed,
            algo: r.algo,
            e: r.e,
            scenarios: r.scenarios,
            lower_bound: r.lower_bound,
            ctrl_bits: r.ctrl_bits,
            ctrl_frac: r.ctrl_frac,
        })
        .expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii");
    format!("{SWEEP_HEADER}\n{body}")
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, SweepError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| SweepError::Table(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != SWEEP_HEADER {
        return Err(SweepError::Table(format!("expected header `{SWEEP_HEADER}`")));
    }
    r.deserialize::<CsvRow>()
        .map(|row| {
            let c = row.map_err(|e| SweepError::Table(e.to_string()))?;
            Ok(SweepRow {
                n: c.n,
                density: c.density,
                seed: c.seed,
                algo: c.algo,
                e: c.e,
                scenarios: c.scenarios,
                lower_bound: c.lower_bound,
                ctrl_bits: c.ctrl_bits,
                ctrl_frac: c.ctrl_frac,
                fallbacks: 0,
            })
        })
        .collect()
}
