use serde::Serialize;

use crate::error::Result;
use crate::geometry::extract_interface;
use crate::grid::{CellSet, DomainMask, FaceAxis, GridSpec, ScalarField};

use super::{CertificateReport, CheckRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaceResidual {
    pub midpoint: [f64; 2],
    /// `d_nu u_+`, the derivative on the `Omega` side along the normal leaving `Omega`.
    pub dnu_inside: f64,
    pub dnu_outside: f64,
    pub u: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobinResidual {
    pub faces: Vec<FaceResidual>,
    pub max_abs: f64,
    /// Interface faces whose neighborhood is not flat.
    pub skipped: usize,
    pub report: CertificateReport,
}

/// Derivative at offset 0 of the quadratic through values at offsets 1, 2, 3
/// (unit spacing).
fn one_sided(u1: f64, u2: f64, u3: f64) -> f64 {
    -2.5 * u1 + 4.0 * u2 - 1.5 * u3
}

/// Transmission residual `d_nu u_+ - d_nu u_- + beta u` on every interface
/// face whose neighborhood is flat: the two tangential neighbor faces are cut
/// with the same orientation and three cell layers on each side, over three
/// columns, are uniform and inside `D`.
///
/// Each record passes when `|r| <= envelope h (1 + beta) max u`.
pub fn robin_residual(
    u: &ScalarField,
    omega: &CellSet,
    beta: f64,
    grid: &GridSpec,
    mask: &DomainMask,
    envelope: f64,
) -> Result<RobinResidual> {
    grid.check_nodes(u.values.len())?;
    u.check_finite()?;
    let mesh = extract_interface(omega, grid, mask)?;
    let mut faces = Vec::new();
    let mut skipped = 0;
    for f in &mesh.faces {
        // The normal leaves Omega; it points along +axis when the lower cell is inside.
        let lo_inside = match f.axis {
            FaceAxis::X => f.normal[0] > 0.0,
            FaceAxis::Y => f.normal[1] > 0.0,
        };
        let lo = if lo_inside { f.inside_cell } else { f.outside_cell };
        let (li, lj) = grid.cell_coords(lo);
        // (normal, tangent) offsets to grid offsets
        let off = |n: isize, t: isize| match f.axis {
            FaceAxis::X => (n, t),
            FaceAxis::Y => (t, n),
        };
        let cell_ok = |n: isize, t: isize| -> bool {
            let (di, dj) = off(n, t);
            let Some((a, b)) = grid.cell_offset(li, lj, di, dj) else {
                return false;
            };
            let c = grid.cell_index(a, b);
            let want = if n <= 0 { lo_inside } else { !lo_inside };
            mask.in_d[c] && omega.member[c] == want
        };
        let flat = (-1..=1).all(|t| (-2..=3).all(|n| cell_ok(n, t)));
        if !flat {
            skipped += 1;
            continue;
        }
        // Node at the face start; the face spans tangential node offsets 0 and 1.
        let (bi, bj) = match f.axis {
            FaceAxis::X => (li + 1, lj),
            FaceAxis::Y => (li, lj + 1),
        };
        let node = |n: isize, t: isize| -> Option<f64> {
            let (di, dj) = off(n, t);
            grid.node_offset(bi, bj, di, dj).map(|(a, b)| u.at(grid, a, b))
        };
        let mut acc = [0.0; 3];
        let mut complete = true;
        for t in 0..=1 {
            let line: Option<Vec<f64>> = (-3..=3).map(|n| node(n, t)).collect();
            let Some(line) = line else {
                complete = false;
                break;
            };
            // line[3] sits on the interface; line[0..3] on the low side.
            let d_low = one_sided(line[2], line[1], line[0]) / grid.h;
            let d_high = one_sided(line[4], line[5], line[6]) / grid.h;
            let (d_in, d_out) = if lo_inside { (d_low, d_high) } else { (d_high, d_low) };
            acc[0] += -d_in;
            acc[1] += d_out;
            acc[2] += line[3];
        }
        if !complete {
            skipped += 1;
            continue;
        }
        let (dnu_inside, dnu_outside, uv) = (0.5 * acc[0], 0.5 * acc[1], 0.5 * acc[2]);
        let residual = dnu_inside - dnu_outside + beta * uv;
        faces.push(FaceResidual { midpoint: f.midpoint, dnu_inside, dnu_outside, u: uv, residual });
    }
    let max_abs = faces.iter().map(|f| f.residual.abs()).fold(0.0, f64::max);
    let scale = faces.iter().map(|f| f.u.abs()).fold(0.0, f64::max);
    let bound = envelope * grid.h * (1.0 + beta) * scale;
    let records = faces
        .iter()
        .map(|f| CheckRecord::upper_bound(&[("x1", f.midpoint[0]), ("x2", f.midpoint[1])], f.residual.abs(), bound, 0.0))
        .collect();
    let report = CertificateReport::new("robin_residual", 0.0, records)
        .with("max_abs", max_abs)
        .with("envelope", bound)
        .with("skipped", skipped as f64);
    Ok(RobinResidual { faces, max_abs, skipped, report })
}
