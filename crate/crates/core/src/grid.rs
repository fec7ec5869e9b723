//! Regular cell grids, domain masks, cell sets and node fields.
//!
//! Sets live on cells and functions live on nodes. Cell `(i, j)` spans
//! `[x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h]`; node `(i, j)` sits at
//! `(x0 + i h, y0 + j h)`. Both are stored row-major (`j` outer, `i` inner).
//!
//! With a periodic lateral boundary the node column `i = n1` is an alias of
//! column `0`; fields keep both copies and [`ScalarField::sync_periodic`]
//! re-establishes equality after a write.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralBc {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub lateral_bc: LateralBc,
}

/// Orientation of a face, named after its unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceAxis {
    /// Separates cells `(i, j)` and `(i + 1, j)`; normal `+e1`.
    X,
    /// Separates cells `(i, j)` and `(i, j + 1)`; normal `+e2`.
    Y,
}

/// A face shared by two grid cells. `lo` is the cell on the negative side of
/// the axis, `hi` the one on the positive side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub axis: FaceAxis,
    pub lo: usize,
    pub hi: usize,
    /// Endpoint node indices (the alias column `n1` is used for wrap faces).
    pub nodes: [usize; 2],
    pub midpoint: [f64; 2],
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize, h: f64, origin: [f64; 2], lateral_bc: LateralBc) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::InvalidGrid(format!("need n1, n2 >= 2, got {n1} x {n2}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { n1, n2, h, origin, lateral_bc })
    }

    pub fn periodic(&self) -> bool {
        self.lateral_bc == LateralBc::Periodic
    }

    pub fn cell_count(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn node_count(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2);
        j * self.n1 + i
    }

    pub fn cell_coords(&self, c: usize) -> (usize, usize) {
        (c % self.n1, c / self.n1)
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n1 && j <= self.n2);
        j * (self.n1 + 1) + i
    }

    pub fn node_coords(&self, n: usize) -> (usize, usize) {
        (n % (self.n1 + 1), n / (self.n1 + 1))
    }

    pub fn node_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    /// Width of the grid along x1.
    pub fn width(&self) -> f64 {
        self.n1 as f64 * self.h
    }

    /// Cell reached from `(i, j)` by an integer offset, wrapping in x1 when periodic.
    pub fn cell_offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<(usize, usize)> {
        let jj = j as isize + dj;
        if jj < 0 || jj >= self.n2 as isize {
            return None;
        }
        let ii = i as isize + di;
        let ii = if self.periodic() {
            ii.rem_euclid(self.n1 as isize)
        } else if ii < 0 || ii >= self.n1 as isize {
            return None;
        } else {
            ii
        };
        Some((ii as usize, jj as usize))
    }

    /// Node reached from `(i, j)` by an integer offset. Periodic grids wrap to
    /// the canonical column range `0..n1`.
    pub fn node_offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<(usize, usize)> {
        let jj = j as isize + dj;
        if jj < 0 || jj > self.n2 as isize {
            return None;
        }
        let ii = i as isize + di;
        let ii = if self.periodic() {
            ii.rem_euclid(self.n1 as isize)
        } else if ii < 0 || ii > self.n1 as isize {
            return None;
        } else {
            ii
        };
        Some((ii as usize, jj as usize))
    }

    /// Canonical representative of a node (column `n1` maps to `0` when periodic).
    pub fn canonical_node(&self, n: usize) -> usize {
        let (i, j) = self.node_coords(n);
        if self.periodic() && i == self.n1 {
            self.node_index(0, j)
        } else {
            n
        }
    }

    /// Cells touching node `(i, j)` that exist in the grid.
    pub fn node_cells(&self, i: usize, j: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(4);
        let ii = i as isize;
        let jj = j as isize;
        for (ci, cj) in [(ii - 1, jj - 1), (ii, jj - 1), (ii - 1, jj), (ii, jj)] {
            if cj < 0 || cj >= self.n2 as isize {
                continue;
            }
            let ci = if self.periodic() {
                ci.rem_euclid(self.n1 as isize)
            } else if ci < 0 || ci >= self.n1 as isize {
                continue;
            } else {
                ci
            };
            out.push(self.cell_index(ci as usize, cj as usize));
        }
        out
    }

    /// True for nodes on the outer edge of the grid.
    pub fn node_is_on_grid_edge(&self, i: usize, j: usize) -> bool {
        j == 0 || j == self.n2 || (!self.periodic() && (i == 0 || i == self.n1))
    }

    /// Every face between two grid cells, in a fixed order: all x-faces
    /// row-major, then all y-faces row-major.
    pub fn faces(&self) -> Vec<Face> {
        let h = self.h;
        let mut faces = Vec::with_capacity(2 * self.cell_count());
        let nx = if self.periodic() { self.n1 } else { self.n1 - 1 };
        for j in 0..self.n2 {
            for i in 0..nx {
                let hi_i = (i + 1) % self.n1;
                faces.push(Face {
                    axis: FaceAxis::X,
                    lo: self.cell_index(i, j),
                    hi: self.cell_index(hi_i, j),
                    nodes: [self.node_index(i + 1, j), self.node_index(i + 1, j + 1)],
                    midpoint: [
                        self.origin[0] + (i + 1) as f64 * h,
                        self.origin[1] + (j as f64 + 0.5) * h,
                    ],
                });
            }
        }
        for j in 0..self.n2 - 1 {
            for i in 0..self.n1 {
                faces.push(Face {
                    axis: FaceAxis::Y,
                    lo: self.cell_index(i, j),
                    hi: self.cell_index(i, j + 1),
                    nodes: [self.node_index(i, j + 1), self.node_index(i + 1, j + 1)],
                    midpoint: [
                        self.origin[0] + (i as f64 + 0.5) * h,
                        self.origin[1] + (j + 1) as f64 * h,
                    ],
                });
            }
        }
        faces
    }

    /// Separation vector `b - a`, using the shortest periodic image in x1.
    pub fn displacement(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let mut dx = b[0] - a[0];
        if self.periodic() {
            let w = self.width();
            dx -= w * (dx / w).round();
        }
        [dx, b[1] - a[1]]
    }

    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    pub(crate) fn check_cells(&self, len: usize) -> Result<()> {
        if len != self.cell_count() {
            return Err(Error::DimensionMismatch { expected: self.cell_count(), got: len });
        }
        Ok(())
    }

    pub(crate) fn check_nodes(&self, len: usize) -> Result<()> {
        if len != self.node_count() {
            return Err(Error::DimensionMismatch { expected: self.node_count(), got: len });
        }
        Ok(())
    }
}

/// Which cells form the design domain `D`, and membership of every cell in
/// the fixed exterior set `E` (used outside `D`, and as the default initial
/// set inside it).
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    pub in_d: Vec<bool>,
    pub in_e: Vec<bool>,
}

impl DomainMask {
    pub fn new(grid: &GridSpec, in_d: Vec<bool>, in_e: Vec<bool>) -> Result<Self> {
        grid.check_cells(in_d.len())?;
        grid.check_cells(in_e.len())?;
        let mask = Self { in_d, in_e };
        if mask.in_d.iter().any(|&d| d) && !mask.domain_connected(grid) {
            return Err(Error::InvalidGrid("cells of D are not edge-connected".into()));
        }
        Ok(mask)
    }

    /// Build a mask from a predicate on cell centers returning `(in_d, in_e)`.
    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 2]) -> (bool, bool)) -> Result<Self> {
        let mut in_d = Vec::with_capacity(grid.cell_count());
        let mut in_e = Vec::with_capacity(grid.cell_count());
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let (d, e) = f(grid.cell_center(i, j));
                in_d.push(d);
                in_e.push(e);
            }
        }
        Self::new(grid, in_d, in_e)
    }

    /// Every cell in `D`; `E` given by a predicate on cell centers.
    pub fn full(grid: &GridSpec, e: impl Fn([f64; 2]) -> bool) -> Result<Self> {
        Self::from_fn(grid, |x| (true, e(x)))
    }

    fn domain_connected(&self, grid: &GridSpec) -> bool {
        let Some(start) = self.in_d.iter().position(|&d| d) else {
            return true;
        };
        let mut seen = vec![false; self.in_d.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1;
        while let Some(c) = stack.pop() {
            let (i, j) = grid.cell_coords(c);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if let Some((a, b)) = grid.cell_offset(i, j, di, dj) {
                    let n = grid.cell_index(a, b);
                    if self.in_d[n] && !seen[n] {
                        seen[n] = true;
                        count += 1;
                        stack.push(n);
                    }
                }
            }
        }
        count == self.in_d.iter().filter(|&&d| d).count()
    }

    /// A node is free (an unknown of the state problem) when every cell around
    /// it exists and lies in `D`; all other nodes form the Dirichlet layer.
    pub fn node_is_free(&self, grid: &GridSpec, i: usize, j: usize) -> bool {
        if grid.periodic() && i == grid.n1 {
            return false;
        }
        let cells = grid.node_cells(i, j);
        cells.len() == 4 && cells.iter().all(|&c| self.in_d[c])
    }

    /// Faces with at least one side in `D` (the faces the optimization can move).
    pub fn face_touches_domain(&self, face: &Face) -> bool {
        self.in_d[face.lo] || self.in_d[face.hi]
    }

    pub fn domain_cell_count(&self) -> usize {
        self.in_d.iter().filter(|&&d| d).count()
    }
}

/// Indicator of a set `Omega` over cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    pub member: Vec<bool>,
}

impl CellSet {
    pub fn new(grid: &GridSpec, member: Vec<bool>) -> Result<Self> {
        grid.check_cells(member.len())?;
        Ok(Self { member })
    }

    pub fn empty(grid: &GridSpec) -> Self {
        Self { member: vec![false; grid.cell_count()] }
    }

    pub fn full(grid: &GridSpec) -> Self {
        Self { member: vec![true; grid.cell_count()] }
    }

    /// `E` itself, extended into `D` (the default starting set).
    pub fn exterior_extension(mask: &DomainMask) -> Self {
        Self { member: mask.in_e.clone() }
    }

    /// Build from a predicate on cell centers inside `D`; cells outside follow `E`.
    pub fn from_fn(grid: &GridSpec, mask: &DomainMask, f: impl Fn([f64; 2]) -> bool) -> Self {
        let mut member = Vec::with_capacity(grid.cell_count());
        for j in 0..grid.n2 {
            for i in 0..grid.n1 {
                let c = grid.cell_index(i, j);
                member.push(if mask.in_d[c] { f(grid.cell_center(i, j)) } else { mask.in_e[c] });
            }
        }
        Self { member }
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.member[c]
    }

    /// Equal to `E` on every cell outside `D`.
    pub fn is_admissible(&self, mask: &DomainMask) -> bool {
        self.member.len() == mask.in_d.len()
            && self
                .member
                .iter()
                .zip(mask.in_d.iter().zip(&mask.in_e))
                .all(|(&m, (&d, &e))| d || m == e)
    }

    pub fn check_admissible(&self, grid: &GridSpec, mask: &DomainMask) -> Result<()> {
        grid.check_cells(self.member.len())?;
        if !self.is_admissible(mask) {
            return Err(Error::InvalidProblem("set differs from E outside D".into()));
        }
        Ok(())
    }

    /// Member cells that lie in `D`.
    pub fn domain_members(&self, mask: &DomainMask) -> usize {
        self.member.iter().zip(&mask.in_d).filter(|(&m, &d)| m && d).count()
    }
}

/// Node-valued function on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_nodes(values.len())?;
        Ok(Self { values })
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        Self { values: vec![c; grid.node_count()] }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for j in 0..=grid.n2 {
            for i in 0..=grid.n1 {
                values.push(f(grid.node_pos(i, j)));
            }
        }
        let mut field = Self { values };
        field.sync_periodic(grid);
        field
    }

    pub fn at(&self, grid: &GridSpec, i: usize, j: usize) -> f64 {
        self.values[grid.node_index(i, j)]
    }

    /// Copy column 0 onto the alias column `n1` of a periodic grid.
    pub fn sync_periodic(&mut self, grid: &GridSpec) {
        if grid.periodic() {
            for j in 0..=grid.n2 {
                self.values[grid.node_index(grid.n1, j)] = self.values[grid.node_index(0, j)];
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at node {k}")));
        }
        Ok(())
    }

    /// Mean of the four corner values of cell `(i, j)`.
    pub fn cell_average(&self, grid: &GridSpec, i: usize, j: usize) -> f64 {
        0.25 * (self.at(grid, i, j)
            + self.at(grid, i + 1, j)
            + self.at(grid, i, j + 1)
            + self.at(grid, i + 1, j + 1))
    }

    /// Minimum over nodes touching at least one `D` cell.
    pub fn min_on_domain(&self, grid: &GridSpec, mask: &DomainMask) -> f64 {
        let mut m = f64::INFINITY;
        for j in 0..=grid.n2 {
            for i in 0..=grid.n1 {
                if grid.node_cells(i, j).iter().any(|&c| mask.in_d[c]) {
                    m = m.min(self.at(grid, i, j));
                }
            }
        }
        m
    }

    pub fn max_on_domain(&self, grid: &GridSpec, mask: &DomainMask) -> f64 {
        -self.scaled(-1.0).min_on_domain(grid, mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, bc: LateralBc) -> GridSpec {
        GridSpec::new(n, n, 1.0 / n as f64, [0.0, 0.0], bc).unwrap()
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(1, 4, 0.1, [0.0, 0.0], LateralBc::Dirichlet).is_err());
        assert!(GridSpec::new(4, 4, 0.0, [0.0, 0.0], LateralBc::Dirichlet).is_err());
        assert!(GridSpec::new(4, 4, -1.0, [0.0, 0.0], LateralBc::Dirichlet).is_err());
    }

    #[test]
    fn face_counts() {
        let g = unit(3, LateralBc::Dirichlet);
        assert_eq!(g.faces().len(), 2 * 3 * 2);
        let p = unit(3, LateralBc::Periodic);
        assert_eq!(p.faces().len(), 3 * 3 + 3 * 2);
        let wrap = p.faces().into_iter().find(|f| f.lo == p.cell_index(2, 0)).unwrap();
        assert_eq!(wrap.hi, p.cell_index(0, 0));
        assert_eq!(wrap.midpoint, [1.0, 1.0 / 6.0]);
    }

    #[test]
    fn disconnected_domain_is_rejected() {
        let g = unit(3, LateralBc::Dirichlet);
        let in_d = vec![true, false, true, false, false, false, false, false, false];
        assert!(DomainMask::new(&g, in_d, vec![false; 9]).is_err());
        // periodic wrap joins the two cells
        let p = unit(3, LateralBc::Periodic);
        let in_d = vec![true, false, true, false, false, false, false, false, false];
        assert!(DomainMask::new(&p, in_d, vec![false; 9]).is_ok());
    }

    #[test]
    fn free_nodes_are_strictly_inside_domain() {
        let g = unit(4, LateralBc::Dirichlet);
        let mask = DomainMask::full(&g, |_| false).unwrap();
        let free: usize = (0..=4)
            .flat_map(|j| (0..=4).map(move |i| (i, j)))
            .filter(|&(i, j)| mask.node_is_free(&g, i, j))
            .count();
        assert_eq!(free, 9);
        let p = unit(4, LateralBc::Periodic);
        let mask = DomainMask::full(&p, |_| false).unwrap();
        assert!(mask.node_is_free(&p, 0, 2));
        assert!(!mask.node_is_free(&p, 4, 2));
        assert!(!mask.node_is_free(&p, 0, 0));
    }

    #[test]
    fn admissibility() {
        let g = unit(2, LateralBc::Dirichlet);
        let mask = DomainMask::new(&g, vec![true, true, false, false], vec![false, false, true, false]).unwrap();
        assert!(CellSet::exterior_extension(&mask).is_admissible(&mask));
        let bad = CellSet::new(&g, vec![true, true, false, false]).unwrap();
        assert!(!bad.is_admissible(&mask));
        assert!(CellSet::new(&g, vec![true; 3]).is_err());
    }

    #[test]
    fn periodic_sync_and_displacement() {
        let g = unit(4, LateralBc::Periodic);
        let f = ScalarField::from_fn(&g, |x| x[0]);
        assert_eq!(f.at(&g, 4, 1), 0.0);
        let d = g.displacement([0.1, 0.0], [0.9, 0.0]);
        assert!((d[0] + 0.2).abs() < 1e-15);
    }
}
