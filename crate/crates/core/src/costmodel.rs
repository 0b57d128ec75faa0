//! Linear area model for the data and control planes.
//!
//! Data plane: `offset + a * (tiles * lanes) + b * (segments * lane_width)`.
//! Control plane: `c * scenario_bits + d * controllers`.
//! Coefficients are non-negative and fitted by least squares against
//! measured implementations.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::LadderTopology;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("model is not calibrated")]
    Uncalibrated,
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("least-squares system is degenerate")]
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostCoefficients {
    /// Fixed data-plane units independent of ladder size.
    pub offset: f64,
    /// Per tile-lane attachment.
    pub a: f64,
    /// Per segment bit.
    pub b: f64,
    /// Per control memory bit.
    pub c: f64,
    /// Per controller.
    pub d: f64,
}

impl CostCoefficients {
    pub fn data_plane(&self, topo: &LadderTopology) -> f64 {
        self.offset
            + self.a * (topo.n_tiles * topo.n_lanes) as f64
            + self.b * (topo.n_segments() as f64 * topo.lane_width_bits as f64)
    }

    pub fn control_plane(&self, scenario_bits: usize, n_controllers: usize) -> f64 {
        self.c * scenario_bits as f64 + self.d * n_controllers as f64
    }

    pub fn report(
        &self,
        topo: &LadderTopology,
        scenario_bits: usize,
        n_controllers: usize,
    ) -> CostReport {
        let d = self.data_plane(topo);
        let c = self.control_plane(scenario_bits, n_controllers);
        CostReport {
            data_plane_units: d,
            control_plane_units: c,
            control_fraction: if c + d > 0.0 { c / (c + d) } else { 0.0 },
            coefficients: *self,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub data_plane_units: f64,
    pub control_plane_units: f64,
    /// `control / (control + data)`.
    pub control_fraction: f64,
    pub coefficients: CostCoefficients,
}

/// Calibrated or uncalibrated model handle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub coefficients: Option<CostCoefficients>,
}

impl CostModel {
    pub fn data_plane_cost(&self, topo: &LadderTopology) -> Result<f64, CostError> {
        Ok(self.coefficients.ok_or(CostError::Uncalibrated)?.data_plane(topo))
    }

    pub fn control_plane_cost(
        &self,
        scenario_bits: usize,
        n_controllers: usize,
    ) -> Result<f64, CostError> {
        Ok(self
            .coefficients
            .ok_or(CostError::Uncalibrated)?
            .control_plane(scenario_bits, n_controllers))
    }
}

/// One implemented design: its size and measured plane costs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneObservation {
    pub name: &'static str,
    pub n_tiles: usize,
    pub n_lanes: usize,
    pub n_scenarios: usize,
    pub n_controllers: usize,
    pub data_units: f64,
    pub control_units: f64,
}

impl PlaneObservation {
    pub fn topology(&self) -> LadderTopology {
        LadderTopology::build(self.n_tiles, Some(self.n_lanes)).expect("valid observation")
    }

    pub fn scenario_bits(&self) -> usize {
        crate::controlgen::control_memory_bits_for(&self.topology(), self.n_scenarios)
    }

    pub fn measured_fraction(&self) -> f64 {
        self.control_units / (self.control_units + self.data_units)
    }
}

/// FPGA measurements of the five small applications (CLB counts): tile
/// count, lanes, scenarios, data-plane CLBs, control-plane CLBs. Controller
/// count follows the default region sizing.
pub fn fpga_observations() -> Vec<PlaneObservation> {
    [
        ("mnist", 11, 3, 8, 3277.0, 73.0),
        ("LeNet", 14, 4, 13, 3503.0, 204.0),
        ("fashion-mnist", 24, 5, 24, 5722.0, 543.0),
        ("cifar10", 26, 5, 23, 6416.0, 548.0),
        ("emnist", 30, 5, 26, 7247.0, 645.0),
    ]
    .into_iter()
    .map(|(name, n_tiles, n_lanes, n_scenarios, data_units, control_units)| {
        let topo = LadderTopology::build(n_tiles, Some(n_lanes)).expect("valid row");
        PlaneObservation {
            name,
            n_tiles,
            n_lanes,
            n_scenarios,
            n_controllers: crate::controlgen::default_controllers(&topo),
            data_units,
            control_units,
        }
    })
    .collect()
}

/// Solves the normal equations of a small dense system by Gaussian
/// elimination with partial pivoting.
fn solve_normal(rows: &[Vec<f64>], y: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let k = cols.len();
    let mut m = alloc::vec![alloc::vec![0.0; k + 1]; k];
    for (r, &t) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                m[i][j] += r[cols[i]] * r[cols[j]];
            }
            m[i][k] += r[cols[i]] * t;
        }
    }
    let scale = m.iter().map(|row| libm::fabs(row[0])).fold(0.0, f64::max).max(1.0);
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| {
            libm::fabs(m[a][col])
                .partial_cmp(&libm::fabs(m[b][col]))
                .expect("finite")
        })?;
        if libm::fabs(m[piv][col]) < 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| m[i][k] / m[i][i]).collect())
}

/// Non-negative least squares by enumerating supports. The optimum is the
/// unconstrained fit on some support with all coefficients non-negative,
/// so the best feasible support fit is exact. Fine for a handful of
/// features.
pub fn nnls(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, CostError> {
    let n_feat = rows.first().map_or(0, Vec::len);
    if n_feat == 0 || rows.iter().any(|r| r.len() != n_feat) {
        return Err(CostError::Degenerate);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n_feat) {
        let cols: Vec<usize> = (0..n_feat).filter(|&i| mask >> i & 1 == 1).collect();
        let Some(sol) = solve_normal(rows, y, &cols) else {
            continue;
        };
        if sol.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut full = alloc::vec![0.0; n_feat];
        for (&c, &v) in cols.iter().zip(&sol) {
            full[c] = v;
        }
        let sse: f64 = rows
            .iter()
            .zip(y)
            .map(|(r, &t)| {
                let p: f64 = r.iter().zip(&full).map(|(a, b)| a * b).sum();
                (p - t) * (p - t)
            })
            .sum();
        // Strict comparison keeps the smallest mask on ties.
        if best.as_ref().is_none_or(|(b, _)| sse < *b - 1e-9 * b.abs().max(1.0)) {
            best = Some((sse, full));
        }
    }
    best.map(|(_, v)| v).ok_or(CostError::Degenerate)
}

/// Fits both planes independently.
pub fn calibrate(observations: &[PlaneObservation]) -> Result<CostCoefficients, CostError> {
    if observations.len() < 2 {
        return Err(CostError::TooFewObservations(observations.len()));
    }
    let data_rows: Vec<Vec<f64>> = observations
        .iter()
        .map(|o| {
            let t = o.topology();
            alloc::vec![
                1.0,
                (t.n_tiles * t.n_lanes) as f64,
                t.n_segments() as f64 * t.lane_width_bits as f64,
            ]
        })
        .collect();
    let data_y: Vec<f64> = observations.iter().map(|o| o.data_units).collect();
    let ctrl_rows: Vec<Vec<f64>> = observations
        .iter()
        .map(|o| alloc::vec![o.scenario_bits() as f64, o.n_controllers as f64])
        .collect();
    let ctrl_y: Vec<f64> = observations.iter().map(|o| o.control_units).collect();
    let dp = nnls(&data_rows, &data_y)?;
    let cp = nnls(&ctrl_rows, &ctrl_y)?;
    Ok(CostCoefficients {
        offset: dp[0],
        a: dp[1],
        b: dp[2],
        c: cp[0],
        d: cp[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero() -> CostCoefficients {
        CostCoefficients {
            offset: 0.0,
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        }
    }

    #[test]
    fn data_plane_formula() {
        let k = CostCoefficients { a: 1.0, ..zero() };
        let t = LadderTopology::build(8, Some(3)).unwrap();
        assert_eq!(k.data_plane(&t), 24.0);
        let k = CostCoefficients { b: 1.0, ..zero() };
        assert_eq!(k.data_plane(&t), 9.0 * 32.0);
    }

    #[test]
    fn control_plane_linear() {
        let k = CostCoefficients { c: 0.5, ..zero() };
        assert_eq!(k.control_plane(0, 0), 0.0);
        assert_eq!(k.control_plane(200, 3), 2.0 * k.control_plane(100, 3));
    }

    #[test]
    fn uncalibrated_model_errors() {
        let m = CostModel::default();
        let t = LadderTopology::build(8, None).unwrap();
        assert_eq!(m.data_plane_cost(&t), Err(CostError::Uncalibrated));
        assert_eq!(m.control_plane_cost(1, 1), Err(CostError::Uncalibrated));
    }

    #[test]
    fn recovers_known_coefficients() {
        let truth = CostCoefficients {
            offset: 120.0,
            a: 7.5,
            b: 0.25,
            c: 0.125,
            d: 11.0,
        };
        let obs: Vec<PlaneObservation> = [(11, 3, 8, 2), (14, 4, 13, 3), (24, 5, 24, 3), (40, 6, 30, 4), (60, 8, 41, 5)]
            .iter()
            .map(|&(n_tiles, n_lanes, n_scenarios, n_controllers)| {
                let t = LadderTopology::build(n_tiles, Some(n_lanes)).unwrap();
                let bits = crate::controlgen::control_memory_bits_for(&t, n_scenarios);
                PlaneObservation {
                    name: "synthetic",
                    n_tiles,
                    n_lanes,
                    n_scenarios,
                    n_controllers,
                    data_units: truth.data_plane(&t),
                    control_units: truth.control_plane(bits, n_controllers),
                }
            })
            .collect();
        let fit = calibrate(&obs).unwrap();
        for o in &obs {
            let t = o.topology();
            assert!((fit.data_plane(&t) - o.data_units).abs() < 1e-9);
            assert!((fit.control_plane(o.scenario_bits(), o.n_controllers) - o.control_units).abs() < 1e-9);
        }
    }

    #[test]
    fn single_row_rejected() {
        let obs = fpga_observations();
        assert_eq!(calibrate(&obs[..1]), Err(CostError::TooFewObservations(1)));
    }

    #[test]
    fn nnls_clamps_negative_direction() {
        // y = 2 x0 - x1 would need a negative coefficient.
        let rows = alloc::vec![
            alloc::vec![1.0, 0.0],
            alloc::vec![1.0, 1.0],
            alloc::vec![2.0, 3.0],
        ];
        let y = [2.0, 1.0, 1.0];
        let sol = nnls(&rows, &y).unwrap();
        assert!(sol.iter().all(|&v| v >= 0.0));
        assert_eq!(sol[1], 0.0);
        assert!(nnls(&[alloc::vec![0.0], alloc::vec![0.0]], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn fpga_rows_fit() {
        let obs = fpga_observations();
        let k = calibrate(&obs).unwrap();
        assert!(k.offset >= 0.0 && k.a >= 0.0 && k.b >= 0.0 && k.c >= 0.0 && k.d >= 0.0);
        for o in &obs {
            let r = k.data_plane(&o.topology()) / o.data_units - 1.0;
            assert!(r.abs() <= 0.15, "{}: {}", o.name, r);
        }
        // Measured fractions reproduce the published percentages.
        let published = [2.18, 5.50, 8.67, 7.87, 8.17];
        for (o, p) in obs.iter().zip(published) {
            assert!((100.0 * o.measured_fraction() - p).abs() < 0.005 + 1e-9, "{}", o.name);
        }
    }
}
