//! Ready-made geometries: the periodic slab, the x2-symmetric square and a
//! configurable rectangle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DomainMask, GridSpec, LateralBc, ScalarField};

/// Grid, domain and boundary data of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: GridSpec,
    pub mask: DomainMask,
    pub v: ScalarField,
}

/// Boundary data `v(x) = constant + amplitude cos(2 pi x1 / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub constant: f64,
    pub amplitude: f64,
}

impl Default for BoundaryData {
    fn default() -> Self {
        Self { constant: 1.0, amplitude: 0.0 }
    }
}

impl BoundaryData {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, amplitude: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.constant.is_finite() && self.amplitude.is_finite()) {
            return Err(Error::InvalidProblem("boundary data must be finite".into()));
        }
        if self.constant - self.amplitude.abs() <= 0.0 {
            return Err(Error::InvalidProblem(format!(
                "boundary data must be positive: min v = {}",
                self.constant - self.amplitude.abs()
            )));
        }
        Ok(())
    }

    pub fn field(&self, grid: &GridSpec, period: f64) -> ScalarField {
        let (c, a) = (self.constant, self.amplitude);
        ScalarField::from_fn(grid, |x| c + a * (std::f64::consts::TAU * x[0] / period).cos())
    }
}

/// Exterior set `E` for [`custom`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exterior {
    UpperHalf,
    LowerHalf,
    /// Disk centred in the rectangle.
    Disk,
}

fn cells_per(length: f64, h: f64, what: &str) -> Result<usize> {
    let n = length / h;
    let k = n.round();
    if !(h > 0.0) || !(length > 0.0) || (n - k).abs() > 1e-9 * n.max(1.0) || k < 1.0 {
        return Err(Error::InvalidGrid(format!("{what} = {length} is not a positive multiple of h = {h}")));
    }
    Ok(k as usize)
}

/// `D = (0, width) x (-a, a)`, periodic in x1, one exterior cell row above
/// (in `E`) and below (not in `E`); `E` extended into `D` is `{x2 > 0}`.
pub fn slab(a: f64, width: f64, h: f64, v: BoundaryData) -> Result<Problem> {
    v.validate()?;
    let n1 = cells_per(width, h, "slab width")?;
    let rows = cells_per(2.0 * a, h, "slab thickness 2a")?;
    let grid = GridSpec::new(n1, rows + 2, h, [0.0, -a - h], LateralBc::Periodic)?;
    let mask = DomainMask::from_fn(&grid, |x| (x[1].abs() < a, x[1] > 0.0))?;
    let v = v.field(&grid, width);
    Ok(Problem { grid, mask, v })
}

/// `D = (0, side) x (-side/2, side/2)` with a one-cell exterior ring and
/// `E = {x2 > 0}`. `side / h` must be even so that `x2 = 0` is a node row.
pub fn square_symmetric(side: f64, h: f64, v: BoundaryData) -> Result<Problem> {
    custom(side, side, h, LateralBc::Dirichlet, Exterior::UpperHalf, 0.0, v)
}

/// `D = (0, width) x (-height/2, height/2)`. With Dirichlet lateral BC a
/// one-cell exterior ring surrounds `D`; with periodic BC only the rows above
/// and below are exterior.
pub fn custom(
    width: f64,
    height: f64,
    h: f64,
    lateral_bc: LateralBc,
    exterior: Exterior,
    disk_radius: f64,
    v: BoundaryData,
) -> Result<Problem> {
    v.validate()?;
    let n1 = cells_per(width, h, "width")?;
    let rows = cells_per(height, h, "height")?;
    if rows % 2 != 0 {
        return Err(Error::InvalidGrid(format!("height / h = {rows} must be even")));
    }
    let (n1, x0) = match lateral_bc {
        LateralBc::Periodic => (n1, 0.0),
        LateralBc::Dirichlet => (n1 + 2, -h),
    };
    let grid = GridSpec::new(n1, rows + 2, h, [x0, -0.5 * height - h], lateral_bc)?;
    if exterior == Exterior::Disk && !(disk_radius > 0.0) {
        return Err(Error::InvalidProblem("disk exterior needs a positive radius".into()));
    }
    let center = [0.5 * width, 0.0];
    let mask = DomainMask::from_fn(&grid, |x| {
        let in_d = x[0] > 0.0 && x[0] < width && x[1].abs() < 0.5 * height;
        let in_e = match exterior {
            Exterior::UpperHalf => x[1] > 0.0,
            Exterior::LowerHalf => x[1] < 0.0,
            Exterior::Disk => (x[0] - center[0]).hypot(x[1] - center[1]) < disk_radius,
        };
        (in_d, in_e)
    })?;
    let v = v.field(&grid, width);
    Ok(Problem { grid, mask, v })
}

/// Closed-form one-dimensional slab minimizer for `v = 1`: `g(x2) = c (1 +
/// beta |x2| / 2)` with `c = 1 / (1 + beta a / 2)`, and its energy per unit
/// width `beta c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlabOracle {
    pub beta: f64,
    pub a: f64,
    pub c: f64,
    pub slope: f64,
    pub energy: f64,
}

impl SlabOracle {
    pub fn new(beta: f64, a: f64) -> Self {
        let c = 1.0 / (1.0 + 0.5 * beta * a);
        Self { beta, a, c, slope: 0.5 * beta * c, energy: beta * c }
    }

    pub fn value(&self, x2: f64) -> f64 {
        self.c * (1.0 + 0.5 * self.beta * x2.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_layout() {
        let p = slab(0.5, 1.0, 0.125, BoundaryData::default()).unwrap();
        assert_eq!((p.grid.n1, p.grid.n2), (8, 10));
        assert_eq!(p.mask.domain_cell_count(), 64);
        // exterior rows: bottom not in E, top in E
        assert!(!p.mask.in_e[p.grid.cell_index(0, 0)]);
        assert!(p.mask.in_e[p.grid.cell_index(0, 9)]);
        assert!(!p.mask.in_d[p.grid.cell_index(3, 9)]);
    }

    #[test]
    fn square_is_symmetric() {
        let p = square_symmetric(1.0, 0.125, BoundaryData::default()).unwrap();
        crate::geometry::check_x2_symmetric(&p.grid, &p.mask).unwrap();
        assert_eq!(p.mask.domain_cell_count(), 64);
    }

    #[test]
    fn odd_rows_are_rejected() {
        assert!(square_symmetric(1.0, 1.0 / 3.0, BoundaryData::default()).is_err());
        assert!(slab(0.5, 1.0, 0.3, BoundaryData::default()).is_err());
    }

    #[test]
    fn nonpositive_data_is_rejected() {
        let v = BoundaryData { constant: 0.5, amplitude: 0.6 };
        assert!(square_symmetric(1.0, 0.25, v).is_err());
    }

    #[test]
    fn oracle_values() {
        let o = SlabOracle::new(1.0, 0.5);
        assert!((o.c - 0.8).abs() < 1e-15);
        assert!((o.energy - 0.8).abs() < 1e-15);
        assert!((o.value(0.5) - 1.0).abs() < 1e-15);
    }
}
