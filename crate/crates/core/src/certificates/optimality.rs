use crate::energy::cell_gradient_sq;
use crate::error::Result;
use crate::geometry::{perimeter, sublevel_in_domain, Region};
use crate::grid::{DomainMask, GridSpec, ScalarField};

use super::{CertificateReport, CheckRecord};

/// `k` equally spaced levels strictly inside `(0, m)`.
pub fn uniform_levels(m: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| m * i as f64 / (k + 1) as f64).collect()
}

/// For each `t`: the Dirichlet energy of `u` on cells with mean `< t`
/// against `beta t^2` times the perimeter of `{u <= t}` taken as a subset of
/// `D` (its boundary along the edge of `D` counts).
pub fn check_optimality_condition(
    u: &ScalarField,
    beta: f64,
    t_samples: &[f64],
    grid: &GridSpec,
    mask: &DomainMask,
    tolerance: f64,
) -> Result<CertificateReport> {
    grid.check_nodes(u.values.len())?;
    u.check_finite()?;
    let h2 = grid.h * grid.h;
    let mut records = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let below = sublevel_in_domain(u, t, grid, mask, true)?;
        let mut lhs = 0.0;
        for (c, _) in below.member.iter().enumerate().filter(|(_, &m)| m) {
            let (i, j) = grid.cell_coords(c);
            lhs += h2 * cell_gradient_sq(u, grid, i, j);
        }
        let sub = sublevel_in_domain(u, t, grid, mask, false)?;
        let per = perimeter(&sub, grid, Region::All)?;
        let rhs = beta * t * t * per;
        records.push(CheckRecord::upper_bound(&[("t", t), ("perimeter", per)], lhs, rhs, tolerance));
    }
    // Every level with an empty sublevel set passes with lhs = rhs = 0.
    let report = CertificateReport::new("optimality_condition", tolerance, records);
    Ok(report)
}
