use serde::Serialize;

use crate::error::Result;
use crate::geometry::{extract_interface, perimeter, Region};
use crate::grid::{CellSet, DomainMask, GridSpec};

use super::{boundary_segments, distance_to_segments, CertificateReport, CheckRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallRecord {
    pub center: [f64; 2],
    pub radius: f64,
    pub perimeter: f64,
    /// Local perimeters of `Omega u B_{r/2}`, `Omega \ B_{r/2}` and the flat cut.
    pub competitors: [f64; 3],
    /// `max (P / P' - 1) / r^(1/3)` over the competitors; infinite when a
    /// competitor has no local perimeter and `Omega` does.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmostMinimality {
    pub balls: Vec<BallRecord>,
    /// Largest finite constant.
    pub summary: f64,
    pub infinite: usize,
    pub report: CertificateReport,
}

/// Tests `Per(Omega; B_r) <= (1 + C r^(1/3)) Per(Omega'; B_r)` against three
/// local competitors in balls `B_r` inside `D` centred on interface faces,
/// for each radius in `radii`. Records pass when the constant is finite and
/// at most `c_max`.
pub fn almost_minimality_constant(
    omega: &CellSet,
    grid: &GridSpec,
    mask: &DomainMask,
    radii: &[f64],
    c_max: f64,
) -> Result<AlmostMinimality> {
    omega.check_admissible(grid, mask)?;
    let segs = boundary_segments(grid, mask);
    let mesh = extract_interface(omega, grid, mask)?;
    let mut balls = Vec::new();
    for face in &mesh.faces {
        let x0 = face.midpoint;
        let room = distance_to_segments(grid, &segs, x0);
        for &r in radii {
            if !(r > 0.0) || r > room {
                continue;
            }
            let ball = Region::Ball { center: x0, radius: r };
            let p = perimeter(omega, grid, ball)?;
            let competitor = |rule: &dyn Fn([f64; 2], bool) -> bool| -> Result<f64> {
                let mut set = omega.clone();
                for j in 0..grid.n2 {
                    for i in 0..grid.n1 {
                        let c = grid.cell_index(i, j);
                        if mask.in_d[c] {
                            set.member[c] = rule(grid.cell_center(i, j), set.member[c]);
                        }
                    }
                }
                perimeter(&set, grid, ball)
            };
            let dist = |x: [f64; 2]| grid.distance(x0, x);
            let grow = competitor(&|x, m| m || dist(x) < 0.5 * r)?;
            let shrink = competitor(&|x, m| m && dist(x) >= 0.5 * r)?;
            let flat = competitor(&|x, m| {
                if dist(x) < r {
                    let d = grid.displacement(x0, x);
                    d[0] * face.normal[0] + d[1] * face.normal[1] < 0.0
                } else {
                    m
                }
            })?;
            let competitors = [grow, shrink, flat];
            let scale = r.cbrt();
            let constant = competitors
                .iter()
                .map(|&q| {
                    if q > 0.0 {
                        (p / q - 1.0) / scale
                    } else if p > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max);
            balls.push(BallRecord { center: x0, radius: r, perimeter: p, competitors, constant });
        }
    }
    let infinite = balls.iter().filter(|b| b.constant.is_infinite()).count();
    let summary = balls.iter().map(|b| b.constant).filter(|c| c.is_finite()).fold(0.0, f64::max);
    let records = balls
        .iter()
        .map(|b| {
            let margin = if b.constant.is_finite() { c_max - b.constant } else { f64::NEG_INFINITY };
            CheckRecord::new(&[("x1", b.center[0]), ("x2", b.center[1]), ("r", b.radius)], b.constant, c_max, margin, 0.0)
        })
        .collect();
    let report = CertificateReport::new("almost_minimality", 0.0, records)
        .with("summary", summary)
        .with("infinite", infinite as f64);
    Ok(AlmostMinimality { balls, summary, infinite, report })
}
