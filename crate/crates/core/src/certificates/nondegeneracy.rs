use serde::Serialize;

use crate::energy::cell_gradient_sq;
use crate::error::Result;
use crate::geometry::{perimeter, sublevel_in_domain, Region};
use crate::grid::{DomainMask, GridSpec, ScalarField};

use super::{CertificateReport, CheckRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    /// `sum over Omega_t of h^2 |grad u|`.
    pub f: f64,
    pub perimeter: f64,
    pub volume: f64,
    /// `(sum over Omega_t of h^2 |grad u|^2)^(1/2) |Omega_t|^(1/2)`.
    pub cauchy_schwarz: f64,
    /// `t beta^(1/2) Per^(1/2) |Omega_t|^(1/2)`; bounds `f` only when the
    /// optimality condition holds at `t`.
    pub chain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nondegeneracy {
    pub report: CertificateReport,
    pub trace: Vec<TracePoint>,
    /// Minimum of `u` over the closure of `D`; every `Omega_t` with `t <= t_star` is empty.
    pub t_star: f64,
    /// `t_star > 0`.
    pub nondegenerate: bool,
    /// Whether the optimality-dependent bound `f <= chain` held at every level.
    pub chain_holds: bool,
}

/// Trace of `f(t)` over `Omega_t = {u < t}` with the Cauchy-Schwarz link
/// `f <= (int |grad u|^2)^(1/2) |Omega_t|^(1/2)` checked at every nonempty
/// level (this link holds for any field).
pub fn nondegeneracy_diagnostic(
    u: &ScalarField,
    beta: f64,
    t_grid: &[f64],
    grid: &GridSpec,
    mask: &DomainMask,
    tolerance: f64,
) -> Result<Nondegeneracy> {
    grid.check_nodes(u.values.len())?;
    u.check_finite()?;
    let h2 = grid.h * grid.h;
    let mut trace = Vec::with_capacity(t_grid.len());
    let mut records = Vec::new();
    let mut chain_holds = true;
    for &t in t_grid {
        let set = sublevel_in_domain(u, t, grid, mask, true)?;
        let (mut f, mut e, mut vol) = (0.0, 0.0, 0.0);
        for (c, _) in set.member.iter().enumerate().filter(|(_, &m)| m) {
            let (i, j) = grid.cell_coords(c);
            let g2 = cell_gradient_sq(u, grid, i, j);
            f += h2 * g2.sqrt();
            e += h2 * g2;
            vol += h2;
        }
        let per = perimeter(&set, grid, Region::All)?;
        let cs = e.sqrt() * vol.sqrt();
        let chain = t * beta.sqrt() * per.sqrt() * vol.sqrt();
        if vol > 0.0 {
            records.push(CheckRecord::upper_bound(&[("t", t), ("volume", vol)], f, cs, tolerance));
            chain_holds &= f <= chain * (1.0 + tolerance);
        }
        trace.push(TracePoint { t, f, perimeter: per, volume: vol, cauchy_schwarz: cs, chain });
    }
    let t_star = u.min_on_domain(grid, mask);
    let report = CertificateReport::new("nondegeneracy", tolerance, records);
    // With every level below t_star the report has no records; the link is
    // vacuous there, which counts as a pass.
    let report = if report.records.is_empty() {
        CertificateReport { status: super::Status::Pass, ..report }
    } else {
        report
    };
    let report = report.with("t_star", t_star);
    Ok(Nondegeneracy { report, trace, t_star, nondegenerate: t_star > 0.0, chain_holds })
}
