use serde::Serialize;

use crate::energy::total_energy;
use crate::error::{Error, Result};
use crate::geometry::{check_x2_symmetric, steiner_symmetrize};
use crate::grid::{CellSet, DomainMask, GridSpec, ScalarField};

use super::{CertificateReport, CheckRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Symmetrization {
    pub j_original: f64,
    pub j_symmetrized: f64,
    pub pass: bool,
    pub report: CertificateReport,
}

/// Compares `J(u, Omega)` with `J(u*, {x2 > 0})`, where `u*` is the Steiner
/// rearrangement of `u` in x2. Needs an x2-symmetric domain, `E = {x2 > 0}`
/// outside `D` and `0 <= u <= 1`.
pub fn symmetrization_test(
    u: &ScalarField,
    omega: &CellSet,
    beta: f64,
    grid: &GridSpec,
    mask: &DomainMask,
    tolerance: f64,
) -> Result<Symmetrization> {
    grid.check_nodes(u.values.len())?;
    check_x2_symmetric(grid, mask)?;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let c = grid.cell_index(i, j);
            if !mask.in_d[c] && mask.in_e[c] != (grid.cell_center(i, j)[1] > 0.0) {
                return Err(Error::UnsupportedGeometry(format!(
                    "exterior set is not the upper half-plane at cell ({i}, {j})"
                )));
            }
        }
    }
    if let Some(x) = u.values.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidField(format!("u must lie in [0, 1], found {x}")));
    }
    let half = CellSet::from_fn(grid, mask, |x| x[1] > 0.0);
    let j_original = total_energy(u, omega, beta, grid, mask)?.total;
    let star = steiner_symmetrize(u, grid, mask)?;
    let j_symmetrized = total_energy(&star, &half, beta, grid, mask)?.total;
    let record = CheckRecord::upper_bound(&[("beta", beta)], j_symmetrized, j_original, tolerance);
    let pass = record.pass;
    let report = CertificateReport::new("symmetrization", tolerance, vec![record])
        .with("j_original", j_original)
        .with("j_symmetrized", j_symmetrized);
    Ok(Symmetrization { j_original, j_symmetrized, pass, report })
}
