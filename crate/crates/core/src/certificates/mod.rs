//! A-posteriori checks on a candidate pair `(u, Omega)`.
//!
//! Every check returns a [`CertificateReport`] made of per-sample records.
//! A record passes when its margin is at least `-tolerance`; a report with
//! no records reports [`Status::NothingToCheck`], which is not a pass.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::grid::{DomainMask, GridSpec};

mod almost_min;
mod curvature;
mod holder;
mod nondegeneracy;
mod optimality;
mod robin;
mod symmetrization;

pub use almost_min::{almost_minimality_constant, AlmostMinimality, BallRecord};
pub use curvature::{curvature_residual, CurvatureResidual, PatchResidual};
pub use holder::{holder_seminorm, HolderEstimate, RANDOM_PAIRS};
pub use nondegeneracy::{nondegeneracy_diagnostic, Nondegeneracy, TracePoint};
pub use optimality::{check_optimality_condition, uniform_levels};
pub use robin::{robin_residual, FaceResidual, RobinResidual};
pub use symmetrization::{symmetrization_test, Symmetrization};

/// Default relative tolerance for exact inequalities.
pub const TOL_CERT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NothingToCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub inputs: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(inputs: &[(&str, f64)], lhs: f64, rhs: f64, margin: f64, tolerance: f64) -> Self {
        Self {
            inputs: inputs.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            lhs,
            rhs,
            margin,
            pass: margin >= -tolerance,
        }
    }

    /// Record for `lhs <= rhs` with margin `1 - lhs / rhs` (or `0` when both
    /// sides vanish, `-1` when only `rhs` does).
    pub fn upper_bound(inputs: &[(&str, f64)], lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = if rhs > 0.0 {
            1.0 - lhs / rhs
        } else if lhs <= 0.0 {
            0.0
        } else {
            -1.0
        };
        Self::new(inputs, lhs, rhs, margin, tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub name: String,
    pub status: Status,
    pub tolerance: f64,
    pub records: Vec<CheckRecord>,
    pub summary: BTreeMap<String, f64>,
}

impl CertificateReport {
    pub fn new(name: &str, tolerance: f64, records: Vec<CheckRecord>) -> Self {
        let status = if records.is_empty() {
            Status::NothingToCheck
        } else if records.iter().all(|r| r.pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self { name: name.to_string(), status, tolerance, records, summary: BTreeMap::new() }
    }

    pub fn nothing_to_check(name: &str, tolerance: f64) -> Self {
        Self::new(name, tolerance, Vec::new())
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.summary.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Anything but an outright failure.
    pub fn acceptable(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Segments of the boundary of `D`: faces between a `D` cell and a cell
/// outside `D`, plus the outer grid edge next to `D` cells.
pub(crate) fn boundary_segments(grid: &GridSpec, mask: &DomainMask) -> Vec<([f64; 2], [f64; 2])> {
    let h = grid.h;
    let mut segs = Vec::new();
    for face in grid.faces() {
        if mask.in_d[face.lo] != mask.in_d[face.hi] {
            let m = face.midpoint;
            let seg = match face.axis {
                crate::grid::FaceAxis::X => ([m[0], m[1] - 0.5 * h], [m[0], m[1] + 0.5 * h]),
                crate::grid::FaceAxis::Y => ([m[0] - 0.5 * h, m[1]], [m[0] + 0.5 * h, m[1]]),
            };
            segs.push(seg);
        }
    }
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            if !mask.in_d[grid.cell_index(i, j)] {
                continue;
            }
            let x0 = grid.node_pos(i, j);
            let x1 = grid.node_pos(i + 1, j + 1);
            if j == 0 {
                segs.push(([x0[0], x0[1]], [x1[0], x0[1]]));
            }
            if j + 1 == grid.n2 {
                segs.push(([x0[0], x1[1]], [x1[0], x1[1]]));
            }
            if !grid.periodic() && i == 0 {
                segs.push(([x0[0], x0[1]], [x0[0], x1[1]]));
            }
            if !grid.periodic() && i + 1 == grid.n1 {
                segs.push(([x1[0], x0[1]], [x1[0], x1[1]]));
            }
        }
    }
    segs
}

/// Distance from `x` to the nearest segment (periodic images in x1 included).
pub(crate) fn distance_to_segments(grid: &GridSpec, segs: &[([f64; 2], [f64; 2])], x: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for &(a, b) in segs {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let half = [0.5 * (b[0] - a[0]), 0.5 * (b[1] - a[1])];
        // segment relative to x
        let d = grid.displacement(x, mid);
        let p = [d[0] - half[0], d[1] - half[1]];
        let e = [2.0 * half[0], 2.0 * half[1]];
        let len2 = e[0] * e[0] + e[1] * e[1];
        let s = if len2 > 0.0 { (-(p[0] * e[0] + p[1] * e[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let q = [p[0] + s * e[0], p[1] + s * e[1]];
        best = best.min(q[0].hypot(q[1]));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LateralBc;

    #[test]
    fn upper_bound_margins() {
        assert!(CheckRecord::upper_bound(&[], 1.0, 2.0, 1e-6).pass);
        assert!(CheckRecord::upper_bound(&[], 0.0, 0.0, 1e-6).pass);
        assert!(!CheckRecord::upper_bound(&[], 1e-3, 0.0, 1e-6).pass);
        assert!(CheckRecord::upper_bound(&[], 1.0 + 1e-7, 1.0, 1e-6).pass);
        assert!(!CheckRecord::upper_bound(&[], 1.0 + 1e-5, 1.0, 1e-6).pass);
    }

    #[test]
    fn empty_report_is_not_a_pass() {
        let r = CertificateReport::nothing_to_check("x", 1e-6);
        assert_eq!(r.status, Status::NothingToCheck);
        assert!(!r.passed());
        assert!(r.acceptable());
    }

    #[test]
    fn boundary_distance_in_unit_square() {
        let g = GridSpec::new(10, 10, 0.125, [-0.125, -0.125], LateralBc::Dirichlet).unwrap();
        let m = DomainMask::from_fn(&g, |x| (x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0, false)).unwrap();
        let segs = boundary_segments(&g, &m);
        assert_eq!(segs.len(), 32);
        assert!((distance_to_segments(&g, &segs, [0.5, 0.5]) - 0.5).abs() < 1e-15);
        assert!((distance_to_segments(&g, &segs, [0.25, 0.5]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn boundary_distance_on_periodic_slab() {
        let g = GridSpec::new(8, 10, 0.125, [0.0, -0.625], LateralBc::Periodic).unwrap();
        let m = DomainMask::from_fn(&g, |x| (x[1].abs() < 0.5, x[1] > 0.0)).unwrap();
        let segs = boundary_segments(&g, &m);
        assert_eq!(segs.len(), 16);
        assert!((distance_to_segments(&g, &segs, [0.0, 0.1]) - 0.4).abs() < 1e-15);
    }
}
